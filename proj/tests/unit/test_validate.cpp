#include <gtest/gtest.h>

#include <fstream>

#include "deepucb/validate.hpp"

using namespace deepucb;

namespace {

const std::filesystem::path kRoot = std::filesystem::path(DEEPUCB_CONFIG_DIR).parent_path();

bool failed(const validate::SuiteResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return !c.passed;
  return false;
}

}  // namespace

TEST(DocsLint, BundledMapPasses) {
  const auto r = validate::docs_suite(kRoot);
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(DocsLint, FlagsMissingDuplicateAndUnknownIdentifiers) {
  const auto root = std::filesystem::temp_directory_path() / "deepucb_docs_lint";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "docs");
  std::filesystem::create_directory_symlink(kRoot / "include", root / "include");
  std::ofstream(root / "docs" / "algorithm_map.md") << "| Step | Identifier | Location |\n"
                                                       "|---|---|---|\n"
                                                       "| a | `select_top_k` | x |\n"
                                                       "| b | `select_top_k` | x |\n"
                                                       "| c | `no_such_function` | x |\n";
  const auto r = validate::docs_suite(root);
  EXPECT_FALSE(r.passed());
  EXPECT_TRUE(failed(r, "docs.listed_once.select_top_k"));
  EXPECT_TRUE(failed(r, "docs.listed_once.ceil_sqrt"));
  EXPECT_TRUE(failed(r, "docs.exists_in_code.no_such_function"));
  EXPECT_FALSE(failed(r, "docs.exists_in_code.select_top_k"));
  std::filesystem::remove_all(root);
}

TEST(ValidateSuites, GradientAndOracleSuitesPass) {
  EXPECT_TRUE(validate::gradient_suite(20).passed());
  EXPECT_TRUE(validate::oracle_suite().passed());
}

TEST(ValidateSuites, WeakCmabRejectionIsNamed) {
  WeakCmabConfig cfg;
  cfg.bands = {{1.0, 1.2}, {0.7, 0.9}};
  const auto r = validate::weakcmab_suite(cfg);
  ASSERT_EQ(r.checks.size(), 1u);
  EXPECT_EQ(r.checks[0].name, "weakcmab.constructor_accepts");
  EXPECT_FALSE(r.checks[0].passed);
  EXPECT_NEAR(r.checks[0].value, 1.0 - 0.9 - 0.4, 1e-12);
}
