#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/error.hpp"

namespace ranksel {

/// Per-observation prediction losses: one row per evaluation point, one
/// column per candidate model. Column-major, so each model's losses are a
/// contiguous span.
class LossPanel {
public:
    LossPanel(Eigen::MatrixXd losses, std::vector<std::string> model_ids)
        : losses_(std::move(losses)), ids_(std::move(model_ids))
    {
        detail::reject_if(losses_.cols() < 2, "loss panel needs at least 2 models");
        detail::reject_if(losses_.rows() < 2, "loss panel needs at least 2 observations");
        detail::reject_if(static_cast<std::size_t>(losses_.cols()) != ids_.size(),
                          "loss panel: model id count does not match column count");
        std::set<std::string> seen(ids_.begin(), ids_.end());
        detail::reject_if(seen.size() != ids_.size(), "loss panel: model ids must be unique");
        for (Eigen::Index j = 0; j < losses_.cols(); ++j)
            for (Eigen::Index i = 0; i < losses_.rows(); ++i)
                detail::reject_if(!std::isfinite(losses_(i, j)),
                                  "loss panel: non-finite loss at row " + std::to_string(i) +
                                      ", model " + ids_[static_cast<std::size_t>(j)]);
    }

    /// Panel with ids "0", "1", ...
    explicit LossPanel(Eigen::MatrixXd losses)
        : LossPanel(losses, default_ids(static_cast<std::size_t>(losses.cols())))
    {
    }

    std::size_t n() const { return static_cast<std::size_t>(losses_.rows()); }
    std::size_t models() const { return static_cast<std::size_t>(losses_.cols()); }

    std::span<const double> column(std::size_t j) const
    {
        return {losses_.col(static_cast<Eigen::Index>(j)).data(), n()};
    }

    const Eigen::MatrixXd& matrix() const { return losses_; }
    const std::vector<std::string>& ids() const { return ids_; }

    /// Mean loss of every model (the cross-validated risk estimate).
    std::vector<double> mean_losses() const
    {
        std::vector<double> out(models());
        for (std::size_t j = 0; j < models(); ++j)
            out[j] = losses_.col(static_cast<Eigen::Index>(j)).mean();
        return out;
    }

private:
    static std::vector<std::string> default_ids(std::size_t m)
    {
        std::vector<std::string> ids(m);
        for (std::size_t j = 0; j < m; ++j) ids[j] = std::to_string(j);
        return ids;
    }

    Eigen::MatrixXd losses_;
    std::vector<std::string> ids_;
};

} // namespace ranksel
