#include "occgrid/losses.hpp"

#include <algorithm>
#include <cmath>

namespace occgrid {

namespace {

constexpr double kClampEps = 1e-7;
constexpr std::size_t kBlock = 4096;

// Fixed-block accumulation: block sums may run in parallel, the final
// fold over blocks is serial in index order, so the rounding sequence is
// independent of the schedule.
template <typename TermFn>
double block_sum(std::size_t n, TermFn&& term) {
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double sum = 0.0;
  for (const double s : partial) sum += s;
  return sum;
}

}  // namespace

double bce_loss(const RealGrid2D& pred_prob, const BevOccupancy& gt) {
  require(pred_prob.rows() == gt.rows() && pred_prob.cols() == gt.cols(),
          "bce_loss: grid dims differ");
  const auto& p = pred_prob.data();
  const auto& y = gt.data();
  const double sum = block_sum(p.size(), [&](std::size_t i) {
    const double pi = std::clamp(static_cast<double>(p[i]), kClampEps, 1.0 - kClampEps);
    return y[i] ? -std::log(pi) : -std::log(1.0 - pi);
  });
  return sum / static_cast<double>(p.size());
}

double smooth_l1_loss(const RealGrid2D& pred, const RealGrid2D& gt,
                      const BevOccupancy& valid_mask, double beta) {
  require(pred.rows() == gt.rows() && pred.cols() == gt.cols() &&
              pred.rows() == valid_mask.rows() && pred.cols() == valid_mask.cols(),
          "smooth_l1_loss: grid dims differ");
  require(beta > 0.0, "smooth_l1_loss: beta must be positive");
  std::int64_t selected = 0;
  for (const auto m : valid_mask.data()) selected += m ? 1 : 0;
  if (selected == 0) return 0.0;
  const auto& pv = pred.data();
  const auto& gv = gt.data();
  const auto& mv = valid_mask.data();
  const double sum = block_sum(pv.size(), [&](std::size_t i) {
    if (!mv[i]) return 0.0;
    const double d = static_cast<double>(pv[i]) - static_cast<double>(gv[i]);
    const double ad = std::abs(d);
    return ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
  });
  return sum / static_cast<double>(selected);
}

double total_loss(const std::vector<FrameLosses>& per_frame, const LossWeights& w) {
  w.validate();
  require(!per_frame.empty(), "total_loss: no frames");
  double sum = 0.0;
  for (const auto& f : per_frame) {
    sum += w.lambda_occ * f.occ + w.lambda_height * f.height + w.lambda_flow * f.flow;
  }
  return sum / static_cast<double>(per_frame.size());
}

}  // namespace occgrid
