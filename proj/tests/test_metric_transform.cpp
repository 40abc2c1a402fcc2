#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace ontotutor;

namespace {

// Hand-written reference for the three standard mappings, kept separate from
// the library so the two can disagree.
struct Reference {
  double imax = 60.0;
  double tavg = 300.0;

  std::vector<double> operator()(double y1, double y2, double y3, double y4, double y5) const {
    const double engaged = y2 == 0.0 ? 0.0 : y3 / y2;
    double x2 = 0.5 * (y4 / imax + engaged);
    double x3 = y2 <= tavg ? y5 / 2.0 : y5 / 2.0 - (y2 - tavg) / tavg;
    if (x3 < 0.0) x3 = 0.0;
    if (x2 > 1.0) x2 = 1.0;
    if (x3 > 1.0) x3 = 1.0;
    return {y1, x2, x3};
  }
};

std::vector<double> y(double y1, double y2, double y3, double y4, double y5) { return {y1, y2, y3, y4, y5}; }

MetricDescriptor metric(std::string name, std::set<std::string> tags) {
  return {std::move(name), std::move(tags), MetricRange{0.0, 1.0}, ""};
}

double score_of(const std::vector<BindingSuggestion>& s, std::string_view a, std::string_view b) {
  for (const auto& x : s)
    if (x.source == a && x.target == b) return x.score;
  return 0.0;
}

ErrorCode bind_error(std::vector<TransformSpec> specs) {
  try {
    ontotutor::bind(standard_source_schema(), TargetSchema::standard(), std::move(specs));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "bind accepted";
  return ErrorCode::IoError;
}

const std::vector<TransformSpec> kStandardSpecs{
    {"x1", {"y1"}, TransformFunction::Identity, std::nullopt},
    {"x2", {"y4", "y3", "y2"}, TransformFunction::RatioMean, 60.0},
    {"x3", {"y5", "y2"}, TransformFunction::PiecewiseOvertime, 300.0},
};

}  // namespace

TEST(SuggestBindings, PartialOverlapScoresTwoThirds) {
  const SourceSchema src{{metric("s", {"quiz", "score"})}};
  const TargetSchema tgt{{metric("t", {"quiz", "score", "competency"})}};
  const auto s = suggest_bindings(src, tgt);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0].score, 0.6667, 1e-12);
}

TEST(SuggestBindings, DisjointPairAbsent) {
  const SourceSchema src{{metric("s", {"time"}), metric("q", {"quiz"})}};
  const TargetSchema tgt{{metric("t", {"quiz"})}};
  const auto s = suggest_bindings(src, tgt);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].source, "q");
}

TEST(SuggestBindings, IdenticalSetsRankFirst) {
  const SourceSchema src{{metric("a", {"quiz", "time"}), metric("b", {"quiz", "score"})}};
  const TargetSchema tgt{{metric("t", {"quiz", "score"})}};
  const auto s = suggest_bindings(src, tgt);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].source, "b");
  EXPECT_EQ(s[0].score, 1.0);
}

TEST(SuggestBindings, ScoreIsSymmetric) {
  Rng rng(5);
  const std::vector<std::string> tags{"quiz", "score", "time", "engagement", "emotion", "affect", "count"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MetricDescriptor> a, b;
    for (int i = 0; i < 4; ++i) {
      std::set<std::string> ta, tb;
      for (const auto& t : tags) {
        if (rng.uniform() < 0.4) ta.insert(t);
        if (rng.uniform() < 0.4) tb.insert(t);
      }
      if (ta.empty()) ta.insert(tags[0]);
      if (tb.empty()) tb.insert(tags[1]);
      a.push_back(metric("a" + std::to_string(i), ta));
      b.push_back(metric("b" + std::to_string(i), tb));
    }
    const auto ab = suggest_bindings(SourceSchema{a}, TargetSchema{b});
    const auto ba = suggest_bindings(SourceSchema{b}, TargetSchema{a});
    ASSERT_EQ(ab.size(), ba.size());
    for (const auto& s : ab) ASSERT_EQ(s.score, score_of(ba, s.target, s.source));
  }
}

TEST(Bind, StandardBindingIsValid) {
  const auto b = ontotutor::bind(standard_source_schema(), TargetSchema::standard(), kStandardSpecs);
  EXPECT_EQ(b.target_dim(), 3u);
  EXPECT_EQ(b, standard_binding());
}

TEST(Bind, MissingTargetIsUncovered) {
  auto specs = kStandardSpecs;
  specs.pop_back();
  try {
    ontotutor::bind(standard_source_schema(), TargetSchema::standard(), specs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UncoveredTarget);
    EXPECT_STREQ(e.what(), "UncoveredTarget: x3");
  }
}

TEST(Bind, ZeroInteractionMaxIsBadParameter) {
  auto specs = kStandardSpecs;
  specs[1].parameter = 0.0;
  EXPECT_EQ(bind_error(specs), ErrorCode::BadParameter);
}

TEST(Bind, OtherRejections) {
  auto unknown = kStandardSpecs;
  unknown[0].inputs = {"y9"};
  EXPECT_EQ(bind_error(unknown), ErrorCode::UnknownMetric);
  auto arity = kStandardSpecs;
  arity[1].inputs = {"y4", "y3"};
  EXPECT_EQ(bind_error(arity), ErrorCode::BadParameter);
  auto twice = kStandardSpecs;
  twice.push_back(kStandardSpecs[0]);
  EXPECT_EQ(bind_error(twice), ErrorCode::DuplicateId);
  auto scale = kStandardSpecs;
  scale[0].function = TransformFunction::Scale;
  EXPECT_EQ(bind_error(scale), ErrorCode::BadParameter);
}

TEST(Apply, WorkedValues) {
  const auto b = standard_binding();
  const Reference ref;
  EXPECT_NEAR(ontotutor::apply(b, y(0.8, 300, 120, 30, 2))[0], 0.8, 1e-9);
  EXPECT_NEAR(ontotutor::apply(b, y(0.8, 300, 120, 30, 2))[1], 0.45, 1e-9);
  EXPECT_NEAR(ontotutor::apply(b, y(0.5, 600, 120, 30, 2))[2], 0.0, 1e-9);
  EXPECT_NEAR(ontotutor::apply(b, y(0.5, 300, 120, 30, 2))[2], 1.0, 1e-9);
  EXPECT_NEAR(ontotutor::apply(b, y(0.5, 300, 300, 90, 2))[1], 1.0, 1e-9);
  EXPECT_NEAR(ref(0.5, 300, 300, 90, 2)[1], 1.0, 1e-9);
}

TEST(Apply, WrongLengthIsSchemaMismatch) {
  const std::vector<double> short_y{0.5, 300.0};
  try {
    ontotutor::apply(standard_binding(), short_y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}

TEST(Apply, OutOfRangeInputs) {
  const auto b = standard_binding();
  EXPECT_THROW(ontotutor::apply(b, y(1.5, 300, 120, 30, 2)), Error);
  EXPECT_THROW(ontotutor::apply(b, y(0.5, 300, 120, 30, 3)), Error);
  EXPECT_THROW(ontotutor::apply(b, y(0.5, std::nan(""), 120, 30, 2)), Error);
}

TEST(Apply, ZeroTotalTimeUsesZeroRatio) {
  const auto x = ontotutor::apply(standard_binding(), y(0.5, 0, 0, 30, 2));
  EXPECT_NEAR(x[1], 0.25, 1e-12);
  EXPECT_NEAR(x[2], 1.0, 1e-12);
}

TEST(ApplyProperties, AgreesWithReferenceAndStaysInRange) {
  const auto b = standard_binding();
  const Reference ref;
  Rng rng(17);
  for (int i = 0; i < 20000; ++i) {
    const double y2 = rng.uniform(0.0, 1200.0);
    const double y3 = rng.uniform(0.0, y2);
    const auto yy = y(rng.uniform(), y2, y3, std::round(rng.uniform(0.0, 120.0)), double(rng.index(3)));
    const auto x = ontotutor::apply(b, yy);
    const auto expected = ref(yy[0], yy[1], yy[2], yy[3], yy[4]);
    for (std::size_t k = 0; k < 3; ++k) {
      ASSERT_TRUE(std::isfinite(x[k]));
      ASSERT_GE(x[k], 0.0);
      ASSERT_LE(x[k], 1.0);
      ASSERT_NEAR(x[k], expected[k], 1e-12);
    }
  }
}

TEST(ApplyProperties, OvertimeContinuousAtAverage) {
  for (double tavg : {1.0, 60.0, 300.0, 1234.5}) {
    for (double emotion : {0.0, 1.0, 2.0}) {
      const double left = transform_fn::piecewise_overtime(emotion, tavg, tavg);
      const double right = transform_fn::piecewise_overtime(emotion, std::nextafter(tavg, 1e300), tavg);
      EXPECT_NEAR(left, emotion / 2.0, 1e-12);
      EXPECT_NEAR(left, right, 1e-12);
    }
  }
}

TEST(ApplyProperties, Monotonicity) {
  Rng rng(23);
  for (int i = 0; i < 10000; ++i) {
    const double emotion = double(rng.index(3));
    const double t1 = rng.uniform(0.0, 1000.0), t2 = rng.uniform(0.0, 1000.0);
    const double lo = std::min(t1, t2), hi = std::max(t1, t2);
    ASSERT_GE(transform_fn::piecewise_overtime(emotion, lo, 300.0), transform_fn::piecewise_overtime(emotion, hi, 300.0));

    const double total = rng.uniform(1.0, 1000.0);
    const double e1 = rng.uniform(0.0, total), e2 = rng.uniform(0.0, total);
    const double n1 = rng.uniform(0.0, 100.0), n2 = rng.uniform(0.0, 100.0);
    ASSERT_LE(transform_fn::ratio_mean(n1, std::min(e1, e2), total, 60.0),
              transform_fn::ratio_mean(n1, std::max(e1, e2), total, 60.0));
    ASSERT_LE(transform_fn::ratio_mean(std::min(n1, n2), e1, total, 60.0),
              transform_fn::ratio_mean(std::max(n1, n2), e1, total, 60.0));
  }
}

TEST(BindingDocument, SampleMatchesStandardBinding) {
  EXPECT_EQ(load_binding_file(testing_support::sample("binding.json")), standard_binding());
}

TEST(BindingDocument, RoundTrip) {
  const auto b = standard_binding(45.0, 240.0);
  EXPECT_EQ(load_binding(save_binding(b)), b);
}

TEST(BindingDocument, UnknownParameterKeyRejected) {
  auto text = save_binding(standard_binding());
  const auto pos = text.find("y4_max");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 6, "y4_cap");
  EXPECT_THROW(load_binding(text), Error);
}

TEST(TransformCsv, SampleTelemetry) {
  const auto out = transform_csv(standard_binding(), detail::read_file(testing_support::sample("telemetry.csv")));
  std::istringstream lines(out);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "x1,x2,x3");
  EXPECT_EQ(first, "0.8,0.45,1");
}
