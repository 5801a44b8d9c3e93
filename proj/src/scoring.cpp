#include "ocnav/scoring.hpp"

namespace ocnav {

std::vector<CandidateScore> score_candidates_serial(const CertificateModel& model,
                                                    const Observation& obs,
                                                    const ControlGrid& grid, double dt) {
    std::vector<CandidateScore> scores(grid.candidates.size());
    for (std::size_t i = 0; i < grid.candidates.size(); ++i) {
        const auto [h, v] = predict_certificates(model, obs, grid.candidates[i], dt);
        scores[i] = {h, v};
    }
    return scores;
}

std::vector<CandidateScore> score_candidates_parallel(const CertificateModel& model,
                                                      const Observation& obs,
                                                      const ControlGrid& grid, double dt) {
    const int n = static_cast<int>(grid.candidates.size());
    std::vector<CandidateScore> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto [h, v] =
            predict_certificates(model, obs, grid.candidates[static_cast<std::size_t>(i)], dt);
        scores[static_cast<std::size_t>(i)] = {h, v};
    }
    return scores;
}

std::vector<CandidateScore> score_candidates(const CertificateModel& model, const Observation& obs,
                                             const ControlGrid& grid, double dt, bool parallel) {
    return parallel ? score_candidates_parallel(model, obs, grid, dt)
                    : score_candidates_serial(model, obs, grid, dt);
}

}  // namespace ocnav
