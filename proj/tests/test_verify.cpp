#include <sstream>

#include <gtest/gtest.h>

#include "rfnoise/verify.hpp"

using namespace rfnoise;

TEST(Verify, QuadratureAgreementPassesOnTheShippedFormula) {
  const auto r = verify_quadrature_agreement();
  EXPECT_TRUE(r.pass());
}

// Mutation test: a corrupted constant in the closed form must be caught by
// the independent quadrature oracle.
TEST(Verify, CorruptedClosedFormConstantIsCaught) {
  VerifyOptions opt;
  opt.closed_form_noise = [](double l, double g, double s) {
    const double root = std::sqrt((l + 1) * (l + 1) + 2 * (l - 1) * g + g * g);
    const double numer = g * g + (3.0 * l - 2.0) * g + 2.0 * l * l + 3.01 * l + 1.0;  // 3 -> 3.01
    return s * 0.5 * (g + 2 * l + 1 - numer / root);
  };
  const auto r = verify_quadrature_agreement(opt);
  EXPECT_FALSE(r.pass());
  EXPECT_GT(r.checks[0].measured, 1e-4);
}

TEST(Verify, LiteralWitnessPasses) { EXPECT_TRUE(verify_literal_witness().pass()); }

TEST(Verify, ReportFormat) {
  Check ok{"a", 0.5, 1.0, true, "measured <= tol"};
  Check bad{"b", 2.0, 1.0, false, "measured <= tol"};
  EXPECT_EQ(check_line(ok), "CHECK a measured=0.5 tol=1 PASS");
  EXPECT_EQ(check_line(bad), "CHECK b measured=2 tol=1 FAIL");

  CriterionResult r{1, "t", {ok}};
  std::ostringstream os;
  print_report(os, {r});
  EXPECT_NE(os.str().find("# a: measured <= tol, tol=1"), std::string::npos);
  EXPECT_NE(os.str().find("CHECK a measured=0.5 tol=1 PASS"), std::string::npos);
  EXPECT_TRUE(all_pass({r}));
  r.checks.push_back(bad);
  EXPECT_FALSE(all_pass({r}));
}

TEST(Verify, InformationalChecksDoNotFail) {
  Check info{"i", 5.0, 1.0, false, "x"};
  info.informational = true;
  CriterionResult r{1, "t", {info}};
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(check_line(info), "CHECK i measured=5 tol=1 INFO");
}

TEST(Verify, QuickLevelRunsTheAnalyticCriteria) {
  const auto results = run_verify(VerifyLevel::quick);
  ASSERT_EQ(results.size(), 4u);
  EXPECT_EQ(results[0].id, 1);
  EXPECT_EQ(results[1].id, 2);
  EXPECT_EQ(results[2].id, 7);
  EXPECT_EQ(results[3].id, 8);
}
