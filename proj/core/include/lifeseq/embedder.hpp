#pragma once

#include "lifeseq/params.hpp"
#include "lifeseq/tokenizer.hpp"

namespace lifeseq {

// time2vec: component 0 is linear (w0 x + p0), components 1.. are
// cos(wz x + pz).
void time2vec(real x, const real* omega, const real* phi, int d, real* out);

struct EmbedderParams {
    Param* concept_emb = nullptr;  // |V| x d
    Param* age_omega = nullptr;    // 1 x d
    Param* age_phi = nullptr;
    Param* pos_omega = nullptr;
    Param* pos_phi = nullptr;
    Param* segment_emb = nullptr;  // 3 x d
    Param* mix = nullptr;          // 1 x 3: alpha (age), beta (position), gamma (segment)
};

// Column means of the concept matrix; subtracted at every lookup while the
// stored matrix keeps its own statistics (weight tying uses the same rows).
Vec concept_mean(const Mat& concept_emb);

// Temporal part of one stamp: alpha*T_A(age) + beta*T_P(pos) + gamma*E_G(seg).
// Sentinel age/position contribute zero vectors.
void temporal_embedding(const TemporalStamp& stamp, const EmbedderParams& p, real* out);

// Row i = mean-removed concept embedding of token i + temporal embedding of
// token i's stamp. Only the first n_rows positions are produced.
Mat embed_sequence(const EncodedSequence& seq, const EmbedderParams& p, const Vec& mean,
                   int n_rows);

// Accumulates parameter gradients for d(loss)/d(embedding rows) = d_x.
// The mean-removal couples every row of the concept matrix; the coupling is
// applied exactly (rank-one correction spread over all rows).
void embed_sequence_backward(const EncodedSequence& seq, const EmbedderParams& p, const Mat& d_x,
                             int n_rows);

}  // namespace lifeseq
