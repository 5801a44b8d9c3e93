#pragma once

#include <vector>

#include "ocnav/lookahead.hpp"

namespace ocnav {

struct CandidateScore {
    double h_next = 0.0;
    double V_next = 0.0;
};

/// Predicted certificate values for every grid candidate. Candidate
/// evaluations share only read-only model and observation data.
///
/// The serial path is the straightforward reference loop; the OpenMP path
/// splits candidates across threads (static schedule, so the output is
/// identical run to run for a fixed thread count).
std::vector<CandidateScore> score_candidates_serial(const CertificateModel& model,
                                                    const Observation& obs,
                                                    const ControlGrid& grid, double dt);

std::vector<CandidateScore> score_candidates_parallel(const CertificateModel& model,
                                                      const Observation& obs,
                                                      const ControlGrid& grid, double dt);

std::vector<CandidateScore> score_candidates(const CertificateModel& model, const Observation& obs,
                                             const ControlGrid& grid, double dt, bool parallel);

}  // namespace ocnav
