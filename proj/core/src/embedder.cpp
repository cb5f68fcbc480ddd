#include "lifeseq/embedder.hpp"

#include <cmath>

namespace lifeseq {

void time2vec(real x, const real* omega, const real* phi, int d, real* out) {
    out[0] = omega[0] * x + phi[0];
    for (int z = 1; z < d; ++z) out[z] = std::cos(omega[z] * x + phi[z]);
}

Vec concept_mean(const Mat& concept_emb) {
    const int v = concept_emb.rows();
    const int d = concept_emb.cols();
    Vec mean(d, 0.0);
    for (int r = 0; r < v; ++r) axpy(1.0, concept_emb.row(r), mean.data(), d);
    for (int c = 0; c < d; ++c) mean[c] /= static_cast<real>(v);
    return mean;
}

void temporal_embedding(const TemporalStamp& stamp, const EmbedderParams& p, real* out) {
    const int d = p.concept_emb->value.cols();
    const real alpha = p.mix->value(0, 0);
    const real beta = p.mix->value(0, 1);
    const real gamma = p.mix->value(0, 2);
    for (int c = 0; c < d; ++c) out[c] = 0.0;
    Vec tv(d);
    if (stamp.age != kNoStamp) {
        time2vec(static_cast<real>(stamp.age), p.age_omega->value.row(0), p.age_phi->value.row(0), d,
                 tv.data());
        axpy(alpha, tv.data(), out, d);
    }
    if (stamp.abs_position != kNoStamp) {
        time2vec(static_cast<real>(stamp.abs_position), p.pos_omega->value.row(0),
                 p.pos_phi->value.row(0), d, tv.data());
        axpy(beta, tv.data(), out, d);
    }
    axpy(gamma, p.segment_emb->value.row(stamp.segment), out, d);
}

Mat embed_sequence(const EncodedSequence& seq, const EmbedderParams& p, const Vec& mean,
                   int n_rows) {
    const Mat& E = p.concept_emb->value;
    const int d = E.cols();
    Mat x(n_rows, d);
    for (int i = 0; i < n_rows; ++i) {
        const int tok = seq.token_ids[i];
        if (tok < 0 || tok >= E.rows()) {
            throw ValidationError("embed_sequence: token id " + std::to_string(tok) +
                                  " out of range for vocabulary of " + std::to_string(E.rows()));
        }
        real* row = x.row(i);
        temporal_embedding(TemporalStamp{seq.abs_position[i], seq.age[i], seq.segment[i]}, p, row);
        const real* e = E.row(tok);
        for (int c = 0; c < d; ++c) row[c] += e[c] - mean[c];
    }
    return x;
}

void embed_sequence_backward(const EncodedSequence& seq, const EmbedderParams& p, const Mat& d_x,
                             int n_rows) {
    Mat& dE = p.concept_emb->grad;
    const int d = dE.cols();
    const int v = dE.rows();
    const real alpha = p.mix->value(0, 0);
    const real beta = p.mix->value(0, 1);
    const real gamma = p.mix->value(0, 2);
    Vec total(d, 0.0);  // accumulates the mean-removal coupling
    Vec tv(d);
    for (int i = 0; i < n_rows; ++i) {
        const real* g = d_x.row(i);
        const int tok = seq.token_ids[i];
        axpy(1.0, g, dE.row(tok), d);
        axpy(1.0, g, total.data(), d);

        const int age = seq.age[i];
        const int pos = seq.abs_position[i];
        const int seg = seq.segment[i];
        if (age != kNoStamp) {
            const real a = static_cast<real>(age);
            const real* om = p.age_omega->value.row(0);
            const real* ph = p.age_phi->value.row(0);
            time2vec(a, om, ph, d, tv.data());
            p.mix->grad(0, 0) += dot(tv.data(), g, d);
            real* dom = p.age_omega->grad.row(0);
            real* dph = p.age_phi->grad.row(0);
            dom[0] += alpha * g[0] * a;
            dph[0] += alpha * g[0];
            for (int z = 1; z < d; ++z) {
                const real s = -std::sin(om[z] * a + ph[z]);
                dom[z] += alpha * g[z] * s * a;
                dph[z] += alpha * g[z] * s;
            }
        }
        if (pos != kNoStamp) {
            const real a = static_cast<real>(pos);
            const real* om = p.pos_omega->value.row(0);
            const real* ph = p.pos_phi->value.row(0);
            time2vec(a, om, ph, d, tv.data());
            p.mix->grad(0, 1) += dot(tv.data(), g, d);
            real* dom = p.pos_omega->grad.row(0);
            real* dph = p.pos_phi->grad.row(0);
            dom[0] += beta * g[0] * a;
            dph[0] += beta * g[0];
            for (int z = 1; z < d; ++z) {
                const real s = -std::sin(om[z] * a + ph[z]);
                dom[z] += beta * g[z] * s * a;
                dph[z] += beta * g[z] * s;
            }
        }
        p.mix->grad(0, 2) += dot(p.segment_emb->value.row(seg), g, d);
        axpy(gamma, g, p.segment_emb->grad.row(seg), d);
    }
    // d(mean)/dE spreads -1/|V| of the summed gradient over every row.
    const real inv_v = 1.0 / static_cast<real>(v);
    for (int r = 0; r < v; ++r) axpy(-inv_v, total.data(), dE.row(r), d);
}

}  // namespace lifeseq
