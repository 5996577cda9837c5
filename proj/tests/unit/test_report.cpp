#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "qtransport/errors.hpp"
#include "qtransport/report.hpp"
#include "test_support.hpp"

namespace qtransport {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(FormatDouble, RoundTrips) {
  SampleStream s = test::stream(70);
  for (int i = 0; i < 1000; ++i) {
    const double x = s.normal() * std::pow(10.0, s.uniform(-30.0, 30.0));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_THROW(format_double(std::nan("")), InvalidArgument);
}

TEST(HistogramCsv, RoundTrip) {
  SampleStream s = test::stream(71);
  Histogram1D h({37, 0.0, 1.0});
  for (int i = 0; i < 4000; ++i) h.add(s.uniform());
  const fs::path dir = test::scratch_dir("hist_csv");
  write_histogram_csv(h, dir / "h.csv");
  const Histogram1D back = read_histogram_csv(dir / "h.csv");
  EXPECT_EQ(back.counts(), h.counts());
  EXPECT_EQ(back.binning().bins, h.binning().bins);
  EXPECT_NEAR(back.binning().lo, 0.0, 1e-15);
  EXPECT_NEAR(back.binning().hi, 1.0, 1e-15);
  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n";
  EXPECT_THROW(read_histogram_csv(dir / "bad.csv"), ConfigError);
}

TEST(Report, SingleSampleWritesEveryFile) {
  CampaignConfig cfg;
  cfg.n_samples = 1;
  cfg.record_entanglement = true;
  cfg.dephasing = DephasingSpec{};
  const CampaignResult r = run_campaign(cfg);
  const fs::path dir = test::scratch_dir("single_report");
  const auto files = write_report(r, dir);
  for (const char* name : {"summary.json", "hist_coherent.csv", "hist_dephased.csv",
                           "hist_c2_max.csv", "hist_c4_max.csv", "cond_c2.csv", "cond_c4.csv",
                           "cond_c2_dephased.csv", "records.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_EQ(files.size(), 9u);
  const std::regex non_finite(R"(\b(nan|inf|infinity)\b)", std::regex::icase);
  for (const auto& f : files) {
    const std::string text = slurp(f);
    EXPECT_FALSE(std::regex_search(text, non_finite)) << f;
  }
  const Histogram1D back = read_histogram_csv(dir / "hist_coherent.csv");
  EXPECT_EQ(back.total(), 1u);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("n_samples").get<std::uint64_t>(), 1u);
}

TEST(Report, CoherentOnlyOmitsDephasedFiles) {
  CampaignConfig cfg;
  cfg.n_samples = 20;
  const CampaignResult r = run_campaign(cfg);
  const fs::path dir = test::scratch_dir("coherent_report");
  write_report(r, dir);
  EXPECT_TRUE(fs::exists(dir / "hist_coherent.csv"));
  EXPECT_FALSE(fs::exists(dir / "hist_dephased.csv"));
  EXPECT_FALSE(fs::exists(dir / "cond_c2.csv"));
  // Missing optional fields use the sentinel.
  std::ifstream in(dir / "records.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header,
            "index,p_out_coherent,t_star,window,p_out_dephased,t_star_dephased,c2_max,c4_max,"
            "c2_max_dephased");
  EXPECT_NE(row.find(",-1,"), std::string::npos);
}

TEST(Report, ConditionalCsvMarksEmptyColumns) {
  Histogram2D h({4, 0.0, 1.0}, {4, 0.0, 1.0});
  h.add(0.1, 0.1);
  const fs::path dir = test::scratch_dir("cond_csv");
  write_conditional_csv(h, dir / "c.csv");
  std::ifstream in(dir / "c.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x_bin,y_bin,density,count");
  std::size_t rows = 0, sentinel = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",-1,") != std::string::npos) ++sentinel;
  }
  EXPECT_EQ(rows, 16u);
  EXPECT_EQ(sentinel, 12u);
}

TEST(Report, ManifestAndSummaryAreJson) {
  RunManifest m;
  m.subcommand = "sample";
  m.config_json = R"({"sites":7})";
  m.seed = 5;
  m.started_utc = utc_timestamp();
  m.finished_utc = utc_timestamp();
  const fs::path dir = test::scratch_dir("manifest");
  write_manifest(m, dir);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j.at("subcommand"), "sample");
  EXPECT_EQ(j.at("config").at("sites"), 7);
  EXPECT_EQ(j.at("seed"), 5);
  EXPECT_FALSE(code_version().empty());
  EXPECT_THROW(write_text_file("/proc/definitely/not/writable", "x"), IoError);
}

}  // namespace
}  // namespace qtransport
