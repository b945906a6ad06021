#include "rd/learner.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "rd/error.hpp"

namespace rd::learner {

using features::FeatureLayout;
using features::Group;

Dataset::Dataset(FeatureLayout layout) : layout_(std::move(layout)) {}

void Dataset::add(std::span<const double> x, const RowMeta& meta) {
  if (x.size() != dim()) {
    fail(ErrorCode::DimensionMismatch,
         "row has " + std::to_string(x.size()) + " features, layout expects " + std::to_string(dim()));
  }
  if (!std::isfinite(meta.label) || meta.label < -1.0f || meta.label > 1.0f) {
    fail(ErrorCode::InvalidArgument, "label outside [-1,1]");
  }
  for (double v : x) features_.push_back(static_cast<float>(v));
  meta_.push_back(meta);
}

void Dataset::append(const Dataset& other) {
  if (!(other.layout_ == layout_)) fail(ErrorCode::DimensionMismatch, "appending dataset with a different layout");
  features_.insert(features_.end(), other.features_.begin(), other.features_.end());
  meta_.insert(meta_.end(), other.meta_.begin(), other.meta_.end());
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out(layout_);
  out.features_.reserve(rows.size() * dim());
  for (std::size_t r : rows) {
    if (r >= this->rows()) fail(ErrorCode::OutOfBounds, "row index out of range");
    const auto x = row(r);
    out.features_.insert(out.features_.end(), x.begin(), x.end());
    out.meta_.push_back(meta_[r]);
  }
  return out;
}

Dataset Dataset::project(const std::vector<Group>& keep) const {
  std::vector<Group> groups;
  for (Group g : layout_.groups()) {
    if (std::find(keep.begin(), keep.end(), g) != keep.end()) groups.push_back(g);
  }
  Dataset out(FeatureLayout(layout_.n_windows(), groups));
  std::vector<std::size_t> columns;
  for (const auto& e : out.layout().entries()) {
    const auto* src = layout_.find(e.group, e.window);
    for (std::size_t i = 0; i < e.length; ++i) columns.push_back(src->start + i);
  }
  out.features_.reserve(columns.size() * rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    const auto x = row(r);
    for (std::size_t c : columns) out.features_.push_back(x[c]);
  }
  out.meta_ = meta_;
  return out;
}

RowSelection all_rows(const Dataset& data) {
  RowSelection rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) fail(ErrorCode::DimensionMismatch, "normalizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
  return out;
}

std::vector<double> Normalizer::apply(std::span<const float> x) const {
  std::vector<double> tmp(x.begin(), x.end());
  return apply(std::span<const double>(tmp));
}

Normalizer fit_normalizer(const Dataset& data, const RowSelection& rows) {
  if (rows.size() < 2) fail(ErrorCode::TooFewRows, "normalizer needs at least two rows");
  const std::size_t d = data.dim();
  Normalizer n;
  n.mean.assign(d, 0.0);
  n.std.assign(d, 0.0);
  for (std::size_t r : rows) {
    const auto x = data.row(r);
    for (std::size_t i = 0; i < d; ++i) n.mean[i] += x[i];
  }
  const double count = static_cast<double>(rows.size());
  for (auto& m : n.mean) m /= count;
  for (std::size_t r : rows) {
    const auto x = data.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double c = x[i] - n.mean[i];
      n.std[i] += c * c;
    }
  }
  for (auto& s : n.std) s = std::max(std::sqrt(s / count), Normalizer::kStdFloor);
  return n;
}

std::vector<double> build_regularizer(const FeatureLayout& layout, double lambda_base) {
  if (!(lambda_base >= 0.0)) fail(ErrorCode::InvalidArgument, "lambda_base must be non-negative");
  std::vector<double> r(layout.total_dim(), 0.0);
  for (const auto& e : layout.entries()) {
    const double value = lambda_base * static_cast<double>(layout.group_total(e.group));
    std::fill(r.begin() + static_cast<std::ptrdiff_t>(e.start),
              r.begin() + static_cast<std::ptrdiff_t>(e.start + e.length), value);
  }
  return r;
}

namespace {
constexpr std::size_t kChunk = 256;
}

struct NormalEquations::State {
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd block;  // one normalized row per column
  Eigen::VectorXd targets;
  std::size_t pending = 0;
};

NormalEquations::NormalEquations(std::size_t dim) : dim_(dim), state_(new State) {
  const auto D = static_cast<Eigen::Index>(dim);
  state_->gram = Eigen::MatrixXd::Zero(D, D);
  state_->rhs = Eigen::VectorXd::Zero(D);
  state_->block.resize(D, static_cast<Eigen::Index>(kChunk));
  state_->targets.resize(static_cast<Eigen::Index>(kChunk));
}

NormalEquations::~NormalEquations() { delete state_; }

void NormalEquations::add_row(std::span<const double> x, double target) {
  if (x.size() != dim_) fail(ErrorCode::DimensionMismatch, "row dimension mismatch");
  const auto k = static_cast<Eigen::Index>(state_->pending);
  std::copy(x.begin(), x.end(), state_->block.col(k).data());
  state_->targets[k] = target;
  ++rows_;
  if (++state_->pending == kChunk) flush();
}

void NormalEquations::flush() {
  auto& s = *state_;
  if (s.pending == 0) return;
  const auto m = static_cast<Eigen::Index>(s.pending);
  s.gram.selfadjointView<Eigen::Lower>().rankUpdate(s.block.leftCols(m));
  s.rhs.noalias() += s.block.leftCols(m) * s.targets.head(m);
  s.pending = 0;
}

std::vector<double> NormalEquations::solve(std::span<const double> regularizer) {
  if (regularizer.size() != dim_) fail(ErrorCode::DimensionMismatch, "regularizer dimension mismatch");
  flush();
  Eigen::MatrixXd a = state_->gram;
  for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += regularizer[static_cast<std::size_t>(i)];
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    fail(ErrorCode::SingularSystem, "normal equations are singular; use a positive regularizer");
  }
  const Eigen::VectorXd w = llt.solve(state_->rhs);
  return std::vector<double>(w.data(), w.data() + w.size());
}

RidgeModel solve_ridge(const Dataset& data, const RowSelection& rows, const Normalizer& normalizer,
                       std::span<const double> regularizer, double lambda_base) {
  const std::size_t d = data.dim();
  if (rows.empty()) fail(ErrorCode::TooFewRows, "ridge solve needs at least one row");
  if (normalizer.mean.size() != d || regularizer.size() != d) {
    fail(ErrorCode::DimensionMismatch, "normalizer/regularizer dimension mismatch");
  }
  for (double v : regularizer) {
    if (!(v >= 0.0)) fail(ErrorCode::InvalidArgument, "regularizer entries must be non-negative");
  }

  double label_sum = 0.0;
  for (std::size_t r : rows) label_sum += data.meta(r).label;
  const double b = label_sum / static_cast<double>(rows.size());

  NormalEquations eq(d);
  std::vector<double> x(d);
  for (std::size_t r : rows) {
    const auto raw = data.row(r);
    for (std::size_t i = 0; i < d; ++i) x[i] = (raw[i] - normalizer.mean[i]) / normalizer.std[i];
    eq.add_row(x, data.meta(r).label - b);
  }
  const auto w = eq.solve(regularizer);

  RidgeModel model;
  model.w = w;
  model.b = b;
  model.normalizer = normalizer;
  model.layout = data.layout();
  model.lambda_base = lambda_base;
  return model;
}

RidgeModel fit(const Dataset& data, const RowSelection& rows, double lambda_base) {
  const auto normalizer = fit_normalizer(data, rows);
  const auto reg = build_regularizer(data.layout(), lambda_base);
  return solve_ridge(data, rows, normalizer, reg, lambda_base);
}

RidgeModel constant_model(const FeatureLayout& layout, double b) {
  RidgeModel m;
  m.w.assign(layout.total_dim(), 0.0);
  m.b = b;
  m.normalizer.mean.assign(layout.total_dim(), 0.0);
  m.normalizer.std.assign(layout.total_dim(), 1.0);
  m.layout = layout;
  return m;
}

namespace {

void check_dim(const RidgeModel& model, std::size_t n) {
  if (n != model.w.size()) {
    fail(ErrorCode::DimensionMismatch,
         "feature vector has " + std::to_string(n) + " entries, model expects " + std::to_string(model.w.size()));
  }
}

template <typename T>
double unclipped_sum(const RidgeModel& model, std::span<const T> x, std::vector<double>* per_entry) {
  check_dim(model, x.size());
  const auto& mean = model.normalizer.mean;
  const auto& sd = model.normalizer.std;
  double total = 0.0;
  for (const auto& e : model.layout.entries()) {
    double s = 0.0;
    for (std::size_t i = e.start; i < e.start + e.length; ++i) {
      s += model.w[i] * ((static_cast<double>(x[i]) - mean[i]) / sd[i]);
    }
    if (per_entry) per_entry->push_back(s);
    total += s;
  }
  return total + model.b;
}

}  // namespace

double predict_unclipped(const RidgeModel& model, std::span<const double> x) {
  return unclipped_sum(model, x, nullptr);
}

double predict(const RidgeModel& model, std::span<const double> x) {
  return std::clamp(unclipped_sum(model, x, nullptr), -1.0, 1.0);
}

double predict(const RidgeModel& model, std::span<const float> x) {
  return std::clamp(unclipped_sum(model, x, nullptr), -1.0, 1.0);
}

std::vector<double> Contributions::group_total(const FeatureLayout& layout) const {
  std::vector<double> totals(features::kAllGroups.size(), 0.0);
  for (std::size_t k = 0; k < per_entry.size(); ++k) {
    totals[static_cast<std::size_t>(layout.entries()[k].group)] += per_entry[k];
  }
  return totals;
}

Contributions contributions(const RidgeModel& model, std::span<const double> x) {
  Contributions c;
  c.per_entry.reserve(model.layout.entries().size());
  c.unclipped = unclipped_sum(model, x, &c.per_entry);
  c.intercept = model.b;
  return c;
}

double imitation_loss(const RidgeModel& model, const Dataset& holdout, const RowSelection& rows) {
  if (rows.empty()) fail(ErrorCode::EmptyHoldout, "imitation loss needs a non-empty holdout");
  double sum = 0.0;
  for (std::size_t r : rows) {
    const double e = predict(model, holdout.row(r)) - static_cast<double>(holdout.meta(r).label);
    sum += e * e;
  }
  return sum / static_cast<double>(rows.size());
}

}  // namespace rd::learner
