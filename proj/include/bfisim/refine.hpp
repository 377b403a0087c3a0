// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/recon_mle.hpp"
#include "bfisim/types.hpp"

namespace bfisim {

// Linear amplitude relations across the M*N antenna pairs, learned from
// training CSI and applied by rescaling candidate amplitude profiles from a
// reference pair. Pair index is row-major: pair = v * M + u.
struct RefinementModel {
    int rx = 0;
    int tx = 0;
    int reference_pair = 0;          // argmax of mean pairwise correlation
    std::vector<double> weights;     // mu per pair; reference entry is 1
    Eigen::MatrixXd correlations;    // pairwise Pearson matrix of the training set

    int pair_count() const { return rx * tx; }
};

// Sample Pearson correlation; zero-variance inputs yield 0 with the flag set.
double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* degenerate = nullptr);

// Amplitude-vs-subcarrier profile of one antenna pair averaged across packets.
std::vector<std::vector<double>> pair_profiles(const std::vector<CsiTensor>& training);

int select_reference_pair(const std::vector<CsiTensor>& training);

RefinementModel fit_weights(const std::vector<CsiTensor>& training, int reference_pair);

// Replaces each non-reference pair's amplitude profile with weight * reference
// profile (blend < 1 mixes old and new); phases, loss and delay are kept.
ReconCandidate apply_refinement(const ReconCandidate& candidate, const RefinementModel& model,
                                double blend = 1.0);

} // namespace bfisim
