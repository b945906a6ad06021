#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rd/features.hpp"

namespace rd::learner {

struct RowMeta {
  float label = 0.0f;  // expert command in [-1, 1]
  std::uint16_t iteration = 0;
  std::uint32_t episode = 0;
  bool takeover = false;

  bool operator==(const RowMeta&) const = default;
};

// Feature rows sharing one layout. Stored as float32, matching the on-disk
// format, so a saved and reloaded dataset is bit-identical in memory.
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(features::FeatureLayout layout);

  const features::FeatureLayout& layout() const { return layout_; }
  std::size_t dim() const { return layout_.total_dim(); }
  std::size_t rows() const { return meta_.size(); }
  bool empty() const { return meta_.empty(); }

  void add(std::span<const double> x, const RowMeta& meta);
  void append(const Dataset& other);

  std::span<const float> row(std::size_t i) const { return {features_.data() + i * dim(), dim()}; }
  const RowMeta& meta(std::size_t i) const { return meta_[i]; }
  const std::vector<RowMeta>& meta() const { return meta_; }

  // Copy holding only the selected rows, in selection order.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  // Copy restricted to the given groups; the layout is rebuilt accordingly.
  Dataset project(const std::vector<features::Group>& keep) const;

  bool operator==(const Dataset&) const = default;

private:
  features::FeatureLayout layout_;
  std::vector<float> features_;
  std::vector<RowMeta> meta_;
};

// Indices of rows to use; empty span means "all rows" for functions taking one.
using RowSelection = std::vector<std::size_t>;

RowSelection all_rows(const Dataset& data);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;

  static constexpr double kStdFloor = 1e-8;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply(std::span<const float> x) const;

  bool operator==(const Normalizer&) const = default;
};

Normalizer fit_normalizer(const Dataset& data, const RowSelection& rows);
inline Normalizer fit_normalizer(const Dataset& data) { return fit_normalizer(data, all_rows(data)); }

// Diagonal of R: lambda_base times the total dimension count of the entry's group.
std::vector<double> build_regularizer(const features::FeatureLayout& layout, double lambda_base);

struct RidgeModel {
  std::vector<double> w;
  double b = 0.0;
  Normalizer normalizer;
  features::FeatureLayout layout;
  double lambda_base = 0.0;

  bool operator==(const RidgeModel&) const = default;
};

// Accumulates X^T X and X^T t row by row, then solves (X^T X + R) w = X^T t
// with a Cholesky factorization. Rows are used exactly as given.
class NormalEquations {
public:
  explicit NormalEquations(std::size_t dim);
  ~NormalEquations();
  NormalEquations(const NormalEquations&) = delete;
  NormalEquations& operator=(const NormalEquations&) = delete;

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return rows_; }
  void add_row(std::span<const double> x, double target);
  // Throws SingularSystem when the regularized system is not positive definite.
  std::vector<double> solve(std::span<const double> regularizer);

private:
  struct State;
  void flush();

  std::size_t dim_;
  std::size_t rows_ = 0;
  State* state_;
};

RidgeModel solve_ridge(const Dataset& data, const RowSelection& rows, const Normalizer& normalizer,
                       std::span<const double> regularizer, double lambda_base = 0.0);
inline RidgeModel solve_ridge(const Dataset& data, const Normalizer& normalizer,
                              std::span<const double> regularizer, double lambda_base = 0.0) {
  return solve_ridge(data, all_rows(data), normalizer, regularizer, lambda_base);
}

// Normalizer + regularizer + solve in one call.
RidgeModel fit(const Dataset& data, const RowSelection& rows, double lambda_base);

// Model that outputs the constant b (w = 0, identity normalizer).
RidgeModel constant_model(const features::FeatureLayout& layout, double b);

double predict_unclipped(const RidgeModel& model, std::span<const double> x);
double predict(const RidgeModel& model, std::span<const double> x);
double predict(const RidgeModel& model, std::span<const float> x);

struct Contributions {
  std::vector<double> per_entry;  // aligned with model.layout.entries()
  double intercept = 0.0;
  double unclipped = 0.0;         // intercept + sum(per_entry), same summation order as predict
  std::vector<double> group_total(const features::FeatureLayout& layout) const;  // indexed by Group
};

Contributions contributions(const RidgeModel& model, std::span<const double> x);

double imitation_loss(const RidgeModel& model, const Dataset& holdout, const RowSelection& rows);
inline double imitation_loss(const RidgeModel& model, const Dataset& holdout) {
  return imitation_loss(model, holdout, all_rows(holdout));
}

// Serialization ------------------------------------------------------------

nlohmann::json layout_to_json(const features::FeatureLayout& layout);
features::FeatureLayout layout_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const RidgeModel& model);
RidgeModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const RidgeModel& model);
RidgeModel load_model(const std::filesystem::path& path);

// Binary "DGRD" dataset: header (magic, u32 dim, u64 rows), then per row
// f32 x dim, f32 label, u16 iteration, u32 episode, u8 takeover; little endian.
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path, const features::FeatureLayout& layout);

}  // namespace rd::learner
