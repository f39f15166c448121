// Copyright 2026 The SAGE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sage/gates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{

nlohmann::json vector_json(const Vector & v)
{
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

Vector vector_from_json(const nlohmann::json & j)
{
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

void check_finite(const Matrix & m, const char * what)
{
  require(m.allFinite(), ErrorKind::kInvalidArgument, std::string(what) + ": non-finite input");
}

}  // namespace

void GateModel::check_query(const Eigen::Ref<const Vector> & x) const
{
  require(static_cast<std::size_t>(x.size()) == dim(), ErrorKind::kInvalidArgument,
    std::string(name()) + " gate: query length " + std::to_string(x.size()) + " != " +
      std::to_string(dim()));
  require(x.allFinite(), ErrorKind::kInvalidArgument,
    std::string(name()) + " gate: non-finite query");
}

GateDecision GateModel::decide(const Eigen::Ref<const Vector> & x) const
{
  require(threshold_.has_value(), ErrorKind::kValidation,
    std::string(name()) + " gate has no calibrated threshold");
  GateDecision d;
  d.score = score(x);
  d.pass = d.score >= *threshold_;
  d.margin = (d.score - *threshold_) / margin_scale_;
  return d;
}

nlohmann::json GateModel::common_json() const
{
  nlohmann::json j;
  j["name"] = std::string(name());
  j["tau"] = threshold_ ? nlohmann::json(*threshold_) : nlohmann::json(nullptr);
  j["margin_scale"] = margin_scale_;
  return j;
}

void GateModel::read_common_json(const nlohmann::json & j)
{
  if (j.contains("tau") && !j.at("tau").is_null()) {
    threshold_ = j.at("tau").get<double>();
  }
  margin_scale_ = j.at("margin_scale").get<double>();
  require(margin_scale_ > 0.0, ErrorKind::kParse, "gate margin_scale must be positive");
}

GateDecision gate_pass(const GateModel & gate, const Eigen::Ref<const Vector> & x)
{
  return gate.decide(x);
}

ShrunkCovariance ledoit_wolf(const Matrix & centered)
{
  const Eigen::Index n = centered.rows();
  const Eigen::Index d = centered.cols();
  require(n >= 2, ErrorKind::kInvalidArgument,
    "Ledoit-Wolf needs at least 2 samples, got " + std::to_string(n));
  require(d >= 1, ErrorKind::kInvalidArgument, "Ledoit-Wolf needs at least one feature");
  check_finite(centered, "ledoit_wolf");

  const double nd = static_cast<double>(n);
  Matrix s = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector y = centered.row(i).transpose();
    s.noalias() += y * y.transpose();
  }
  s /= nd;

  const double m = s.trace() / static_cast<double>(d);
  const Matrix target = m * Matrix::Identity(d, d);
  const double d2 = (s - target).squaredNorm() / static_cast<double>(d);

  double b_bar2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector y = centered.row(i).transpose();
    b_bar2 += (y * y.transpose() - s).squaredNorm();
  }
  b_bar2 /= nd * nd * static_cast<double>(d);

  const double b2 = std::min(b_bar2, d2);
  const double rho = d2 > 0.0 ? b2 / d2 : 0.0;

  ShrunkCovariance out;
  out.rho = std::clamp(rho, 0.0, 1.0);
  out.target_scale = m;
  out.sigma = out.rho * target + (1.0 - out.rho) * s;
  return out;
}

MahalanobisGate MahalanobisGate::fit(const Matrix & fraud, const std::vector<double> & jitter_ladder)
{
  require(fraud.rows() >= 2, ErrorKind::kInvalidArgument,
    "Mahalanobis gate needs at least 2 fraud samples, got " + std::to_string(fraud.rows()));
  check_finite(fraud, "fit_mahalanobis");

  MahalanobisGate gate;
  gate.mean_ = Vector::Zero(fraud.cols());
  for (Eigen::Index i = 0; i < fraud.rows(); ++i) {
    gate.mean_ += fraud.row(i).transpose();
  }
  gate.mean_ /= static_cast<double>(fraud.rows());

  Matrix centered = fraud;
  for (Eigen::Index i = 0; i < centered.rows(); ++i) {
    centered.row(i) -= gate.mean_.transpose();
  }
  const auto shrunk = ledoit_wolf(centered);
  gate.sigma_ = shrunk.sigma;
  gate.rho_ = shrunk.rho;
  gate.factorize(jitter_ladder, shrunk.target_scale);

  std::vector<double> scores(static_cast<std::size_t>(fraud.rows()));
  for (Eigen::Index i = 0; i < fraud.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] = gate.score(fraud.row(i).transpose());
  }
  const double mad = median_abs_deviation(scores);
  gate.margin_scale_ = mad > 0.0 ? mad : 1.0;
  return gate;
}

void MahalanobisGate::factorize(const std::vector<double> & jitter_ladder, double target_scale)
{
  llt_.compute(sigma_);
  if (llt_.info() == Eigen::Success) {
    jitter_ = 0.0;
    return;
  }
  const Eigen::Index d = sigma_.rows();
  for (double eps : jitter_ladder) {
    const Matrix jittered = sigma_ + eps * target_scale * Matrix::Identity(d, d);
    llt_.compute(jittered);
    if (llt_.info() == Eigen::Success) {
      sigma_ = jittered;
      jitter_ = eps;
      return;
    }
  }
  fail(ErrorKind::kNumeric,
    "shrunk covariance is not positive definite after the jitter ladder (degenerate fraud set?)");
}

double MahalanobisGate::score(const Eigen::Ref<const Vector> & x) const
{
  check_query(x);
  const Vector z = llt_.matrixL().solve(x - mean_);
  return std::sqrt(z.squaredNorm());
}

nlohmann::json MahalanobisGate::to_json() const
{
  auto j = common_json();
  j["mu"] = vector_json(mean_);
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sigma_.rows(); ++i) {
    rows.push_back(vector_json(sigma_.row(i).transpose()));
  }
  j["sigma_star"] = std::move(rows);
  j["rho"] = rho_;
  j["jitter"] = jitter_;
  return j;
}

MahalanobisGate MahalanobisGate::from_json(const nlohmann::json & j)
{
  require(j.at("name") == "mahalanobis", ErrorKind::kParse, "not a mahalanobis gate");
  MahalanobisGate gate;
  gate.read_common_json(j);
  gate.mean_ = vector_from_json(j.at("mu"));
  const auto & rows = j.at("sigma_star");
  const auto d = gate.mean_.size();
  require(static_cast<Eigen::Index>(rows.size()) == d, ErrorKind::kParse, "sigma_star shape");
  gate.sigma_.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Vector row = vector_from_json(rows[static_cast<std::size_t>(i)]);
    require(row.size() == d, ErrorKind::kParse, "sigma_star shape");
    gate.sigma_.row(i) = row.transpose();
  }
  gate.rho_ = j.at("rho").get<double>();
  gate.jitter_ = j.value("jitter", 0.0);
  gate.llt_.compute(gate.sigma_);
  require(gate.llt_.info() == Eigen::Success, ErrorKind::kNumeric,
    "serialized sigma_star is not positive definite");
  return gate;
}

std::unique_ptr<GateModel> MahalanobisGate::clone() const
{
  return std::make_unique<MahalanobisGate>(*this);
}

KnnDensityGate KnnDensityGate::fit(const Matrix & fraud, std::size_t k)
{
  require(fraud.rows() >= 1, ErrorKind::kInvalidArgument, "k-NN gate needs a non-empty fraud set");
  require(k >= 1 && k <= static_cast<std::size_t>(fraud.rows()), ErrorKind::kInvalidArgument,
    "k-NN rank k=" + std::to_string(k) + " outside [1, " + std::to_string(fraud.rows()) + "]");
  check_finite(fraud, "fit_knn");

  KnnDensityGate gate;
  gate.dim_ = static_cast<std::size_t>(fraud.cols());
  gate.k_ = k;
  gate.reference_.reserve(static_cast<std::size_t>(fraud.size()));
  for (Eigen::Index i = 0; i < fraud.rows(); ++i) {
    for (Eigen::Index j = 0; j < fraud.cols(); ++j) {
      gate.reference_.push_back(fraud(i, j));
    }
  }

  // leave-one-out scores need k other points
  const std::size_t n = gate.reference_size();
  if (k <= n - 1) {
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) {
      loo[i] = gate.kth_distance(gate.reference_.data() + i * gate.dim_, i);
    }
    const double mad = median_abs_deviation(loo);
    gate.margin_scale_ = mad > 0.0 ? mad : 1.0;
  }
  return gate;
}

double KnnDensityGate::kth_distance(const double * x, std::size_t skip) const
{
  const std::size_t n = reference_size();
  std::vector<double> sq;
  sq.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (r == skip) {
      continue;
    }
    const double * ref = reference_.data() + r * dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = x[j] - ref[j];
      acc += diff * diff;
    }
    sq.push_back(acc);
  }
  const auto kth = sq.begin() + static_cast<std::ptrdiff_t>(k_ - 1);
  std::nth_element(sq.begin(), kth, sq.end());
  return std::sqrt(*kth);
}

double KnnDensityGate::score(const Eigen::Ref<const Vector> & x) const
{
  check_query(x);
  const Vector local = x;
  return kth_distance(local.data(), std::numeric_limits<std::size_t>::max());
}

nlohmann::json KnnDensityGate::to_json() const
{
  auto j = common_json();
  j["k"] = k_;
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < reference_size(); ++r) {
    rows.push_back(std::vector<double>(
      reference_.begin() + static_cast<std::ptrdiff_t>(r * dim_),
      reference_.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim_)));
  }
  j["reference"] = std::move(rows);
  return j;
}

KnnDensityGate KnnDensityGate::from_json(const nlohmann::json & j)
{
  require(j.at("name") == "knn", ErrorKind::kParse, "not a knn gate");
  KnnDensityGate gate;
  gate.read_common_json(j);
  gate.k_ = j.at("k").get<std::size_t>();
  const auto & rows = j.at("reference");
  require(!rows.empty(), ErrorKind::kParse, "knn gate has no reference points");
  gate.dim_ = rows[0].size();
  require(gate.dim_ >= 1, ErrorKind::kParse, "knn reference dimension");
  for (const auto & row : rows) {
    require(row.size() == gate.dim_, ErrorKind::kParse, "ragged knn reference");
    for (const auto & v : row) {
      gate.reference_.push_back(v.get<double>());
    }
  }
  require(gate.k_ >= 1 && gate.k_ <= gate.reference_size(), ErrorKind::kParse,
    "knn rank out of range");
  return gate;
}

std::unique_ptr<GateModel> KnnDensityGate::clone() const
{
  return std::make_unique<KnnDensityGate>(*this);
}

std::unique_ptr<GateModel> gate_from_json(const nlohmann::json & j)
{
  const auto name = j.at("name").get<std::string>();
  if (name == "mahalanobis") {
    return std::make_unique<MahalanobisGate>(MahalanobisGate::from_json(j));
  }
  if (name == "knn") {
    return std::make_unique<KnnDensityGate>(KnnDensityGate::from_json(j));
  }
  fail(ErrorKind::kParse, "unknown gate type '" + name + "'");
}

}  // namespace sage
