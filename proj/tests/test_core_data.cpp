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

#include "doctest.h"

#include <cmath>
#include <string>

#include "sage/core_data.hpp"
#include "sage/error.hpp"
#include "sage/util.hpp"
#include "support.hpp"

namespace sage
{
namespace
{

ErrorKind kind_of(const auto & body)
{
  try {
    body();
  } catch (const Error & e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_CASE("dataset parses valid rows")
{
  const auto data = parse_dataset(
    "id,label,f0,f1\na,fraud,1,2\nb,nonfraud,3,4\nc,unlabeled,-1.5,0\n", 2);
  CHECK(data.size() == 3);
  CHECK(data.dim() == 2);
  CHECK(data.label(0) == Label::kFraud);
  CHECK(data.features(2)[0] == -1.5);
  CHECK(data.find("b") == std::optional<std::size_t>(1));
}

TEST_CASE("non-finite feature names the row")
{
  try {
    parse_dataset("id,label,f0,f1\na,fraud,1,2\nb,nonfraud,NaN,4\n", 2);
    FAIL("NaN accepted");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("malformed rows are rejected")
{
  CHECK(kind_of([] { parse_dataset("id,label,f0\na,fraud,1,2\n", 1); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_dataset("id,label,f0\na,bogus,1\n", 1); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_dataset("id,label,f0\na,fraud,1\na,fraud,2\n", 1); }) ==
        ErrorKind::kParse);
  CHECK(kind_of([] { parse_dataset("id,label,f0\na,fraud,x\n", 1); }) == ErrorKind::kParse);
}

TEST_CASE("header-only file gives an empty dataset")
{
  CHECK(parse_dataset("id,label,f0,f1\n", 2).empty());
}

TEST_CASE("dataset round-trips through csv")
{
  const auto m = test::normal_matrix(20, 3, 5);
  const auto data = test::dataset_from(m, Label::kNonFraud);
  const auto back = parse_dataset(format_dataset(data), 3);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.id(i) == data.id(i));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(back.features(i)[j] == data.features(i)[j]);
    }
  }
}

TEST_CASE("standardizer fit examples")
{
  Dataset data(2);
  data.add("a", Label::kUnlabeled, std::vector<double>{0, 0});
  data.add("b", Label::kUnlabeled, std::vector<double>{2, 2});
  data.add("c", Label::kFraud, std::vector<double>{100, 100});
  const auto s = fit_standardizer(data, LabelFilter::only(Label::kUnlabeled));
  CHECK(s.mean(0) == doctest::Approx(1.0));
  CHECK(s.mean(1) == doctest::Approx(1.0));
  CHECK(s.scale(0) == doctest::Approx(1.0));
  CHECK(s.scale(1) == doctest::Approx(1.0));

  Dataset flat(2);
  flat.add("a", Label::kUnlabeled, std::vector<double>{3, 0});
  flat.add("b", Label::kUnlabeled, std::vector<double>{3, 2});
  CHECK(fit_standardizer(flat, LabelFilter::all()).scale(0) == 1.0);

  CHECK(kind_of([&] { fit_standardizer(data, LabelFilter::only(Label::kFraud)); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("standardize examples")
{
  const Standardizer s{Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
  const auto z = s.transform(std::vector<double>{3, 5});
  CHECK(z(0) == doctest::Approx(1.0));
  CHECK(z(1) == doctest::Approx(2.0));
  CHECK(s.transform(std::vector<double>{1, 1}).norm() == 0.0);
  const auto id = test::identity_standardizer(2);
  CHECK(id.transform(std::vector<double>{3, 5}) == Eigen::Vector2d(3, 5));
}

TEST_CASE("standardized fit subset has zero mean and unit population spread")
{
  Matrix m = test::normal_matrix(500, 4, 9);
  m = (m * 3.0).array() + 7.0;
  const auto data = test::dataset_from(m);
  const auto s = fit_standardizer(data, LabelFilter::all());
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = i;
  }
  const Matrix z = standardize_rows(s, data, rows);
  const Vector mean = z.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double var = (z.col(j).array() - mean(j)).square().sum() / static_cast<double>(z.rows());
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("label filter parsing")
{
  const auto f = LabelFilter::parse("fraud,nonfraud");
  CHECK(f.contains(Label::kFraud));
  CHECK(f.contains(Label::kNonFraud));
  CHECK_FALSE(f.contains(Label::kUnlabeled));
  CHECK(LabelFilter::parse(f.to_string()).to_string() == f.to_string());
}

TEST_CASE("real formatting round-trips")
{
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) {
    double back = 0.0;
    REQUIRE(parse_real(format_real(v), back));
    CHECK(back == v);
  }
  double out = 0.0;
  CHECK_FALSE(parse_real("1.5x", out));
}

TEST_CASE("type-7 quantile and mad")
{
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({1, 2, 3, 4}, 0.0) == 1.0);
  CHECK(quantile({1, 2, 3, 4}, 1.0) == 4.0);
  CHECK(quantile({10, 20}, 0.25) == doctest::Approx(12.5));
  const std::vector<double> v{1, 2, 3, 4, 100};
  CHECK(median_abs_deviation(v) == doctest::Approx(1.0));
}

TEST_CASE("fnv1a64 reference values")
{
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

}  // namespace sage
