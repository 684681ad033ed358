//
// Copyright 2026 The SSIE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "ssie/dataset.hpp"

namespace ssie {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("ssie_dataset_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string Write(const std::string& name, const std::string& content) {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

const char* kSchema = R"({
  "name": "toy",
  "header": true,
  "missing_markers": ["?"],
  "filters": [{"column": "days", "min": -2, "max": 2},
              {"column": "color", "exclude": ["void"]}],
  "group": "shade=dark",
  "fields": [
    {"column": "age", "binning": {"kind": "numeric", "edges": [30, 50]}},
    {"column": "color", "binning": {"kind": "categorical"}},
    {"column": "shade", "role": "group",
     "binning": {"kind": "map", "map": {"black": "dark", "navy": "dark"},
                 "default": "light"},
     "indicator": "dark"},
    {"column": "label", "role": "target", "positive": ["yes"]}
  ]
})";

SchemaConfig ToySchema() { return SchemaConfig::FromJson(nlohmann::json::parse(kSchema)); }

const char* kToyCsv =
    "age,color,shade,days,label\n"
    "25,red,black,0,yes\n"
    "35,\"blue, light\",white,1,no\n"
    "55,red,navy,-1,yes\n"
    "45,green,?,0,no\n"
    "45,green,white,9,no\n"
    "60,void,white,0,yes\n"
    "\n"
    "29,blue,navy,2,no\n";

TEST(SchemaTest, ParsesAndDigests) {
  const auto s = ToySchema();
  EXPECT_EQ(s.name, "toy");
  EXPECT_EQ(s.fields.size(), 4u);
  EXPECT_EQ(s.Target().column, "label");
  EXPECT_EQ(s.digest.size(), 64u);
  EXPECT_EQ(s.digest, ToySchema().digest);
}

TEST(SchemaTest, RejectsInvalidSchemas) {
  auto parse = [](const char* text) {
    return SchemaConfig::FromJson(nlohmann::json::parse(text));
  };
  EXPECT_THROW(parse(R"({"fields": [{"column": "a"}]})"), DataError);
  EXPECT_THROW(parse(R"({"fields": [
      {"column": "a", "role": "target", "positive": ["1"]},
      {"column": "b", "role": "target", "positive": ["1"]}]})"),
               DataError);
  EXPECT_THROW(parse(R"({"fields": [
      {"column": "a", "binning": {"kind": "numeric", "edges": [3, 1]}},
      {"column": "t", "role": "target", "positive": ["1"]}]})"),
               DataError);
  EXPECT_THROW(parse(R"({"fields": [
      {"column": "a", "role": "feature"},
      {"column": "t", "role": "target", "positive": ["1"]}]})"),
               DataError);
  EXPECT_THROW(parse(R"({"fields": [
      {"column": "t", "role": "target"}]})"),
               DataError);
  EXPECT_THROW(parse(R"({"header": false, "fields": [
      {"column": "t", "role": "target", "positive": ["1"]}]})"),
               DataError);
  EXPECT_THROW(parse(R"({"fields": 3})"), DataError);
}

TEST(LoadCsvTest, EncodesToyFile) {
  TempDir dir;
  const auto path = dir.Write("toy.csv", kToyCsv);
  const auto d = LoadCsv(path, ToySchema());

  EXPECT_EQ(d.provenance().rows_read, 7);
  EXPECT_EQ(d.provenance().rows_filtered, 2);  // days = 9, color = void
  EXPECT_EQ(d.provenance().rows_missing, 1);   // shade = ?
  ASSERT_EQ(d.rows(), 4u);

  const std::vector<std::string> names{
      "age=<30", "age=>=50", "age=[30,50)", "color=blue", "color=blue, light",
      "color=red", "shade=dark"};
  EXPECT_EQ(d.feature_names(), names);
  const std::vector<std::uint8_t> target{1, 0, 1, 0};
  EXPECT_EQ(std::vector<std::uint8_t>(d.target().begin(), d.target().end()),
            target);
  EXPECT_EQ(d.value(0, d.RequireFeature("shade=dark")), 1);
  EXPECT_EQ(d.value(1, d.RequireFeature("shade=dark")), 0);
  EXPECT_EQ(d.value(2, d.RequireFeature("shade=dark")), 1);
  EXPECT_EQ(d.value(1, d.RequireFeature("color=blue, light")), 1);
  EXPECT_EQ(d.value(3, d.RequireFeature("age=<30")), 1);
  EXPECT_EQ(d.feature_source(0), d.feature_source(2));
  EXPECT_NE(d.feature_source(0), d.feature_source(3));
  ASSERT_TRUE(d.default_group());
  EXPECT_EQ(*d.default_group(), "shade=dark");
  EXPECT_EQ(d.provenance().source_digests.front(), Sha256Hex(kToyCsv));
}

TEST(LoadCsvTest, OneHotColumnsPartitionEachField) {
  TempDir dir;
  const auto d = LoadCsv(dir.Write("toy.csv", kToyCsv), ToySchema());
  std::map<int, std::vector<int>> sums;
  for (std::size_t f = 0; f < d.features(); ++f) {
    if (d.feature_name(f) == "shade=dark") continue;  // indicator column
    auto& s = sums[d.feature_source(f)];
    s.resize(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) s[r] += d.value(r, f);
  }
  for (const auto& [source, s] : sums) {
    for (int v : s) EXPECT_EQ(v, 1) << d.source_fields()[source];
  }
}

TEST(LoadCsvTest, ReportsUncoveredValues) {
  TempDir dir;
  auto j = nlohmann::json::parse(kSchema);
  j["fields"][1]["binning"]["values"] = {"red", "blue"};
  try {
    LoadCsv(dir.Write("toy.csv", kToyCsv), SchemaConfig::FromJson(j));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("color"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'blue, light'"), std::string::npos) << msg;
  }
}

TEST(LoadCsvTest, ReportsRaggedRowsWithLineNumber) {
  TempDir dir;
  const auto path = dir.Write("bad.csv",
                              "age,color,shade,days,label\n"
                              "25,red,black,0,yes\n"
                              "35,red,black,0\n");
  try {
    LoadCsv(path, ToySchema());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
}

TEST(LoadCsvTest, MissingColumnAndFileAreDataErrors) {
  TempDir dir;
  EXPECT_THROW(LoadCsv(dir.Write("a.csv", "age,color\n1,red\n"), ToySchema()),
               DataError);
  EXPECT_THROW(LoadCsv("/nonexistent/file.csv", ToySchema()), DataError);
}

TEST(LoadCsvTest, HeaderlessFilesConcatenate) {
  TempDir dir;
  auto schema = SchemaConfig::FromJson(nlohmann::json::parse(R"({
    "header": false, "column_names": ["x", "y"], "skip_prefix": "|",
    "fields": [{"column": "x"},
               {"column": "y", "role": "target", "positive": ["1", "1."]}]
  })"));
  const auto a = dir.Write("a.csv", "p, 1\nq, 0\n");
  const auto b = dir.Write("b.csv", "|comment line\nq, 1.\n");
  const auto d = LoadCsv(std::vector<std::string>{a, b}, schema);
  ASSERT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.target()[2], 1);
  EXPECT_EQ(d.provenance().sources.size(), 2u);
}

TEST(LoadCsvTest, EverythingFilteredIsAnError) {
  TempDir dir;
  EXPECT_THROW(LoadCsv(dir.Write("t.csv",
                                 "age,color,shade,days,label\n"
                                 "25,red,black,7,yes\n"),
                       ToySchema()),
               DataError);
}

TEST(EncodedDatasetTest, ValidatesShapes) {
  EXPECT_THROW(EncodedDataset::FromRows({"a"}, {{0}, {1, 1}}, {0, 1}),
               DataError);
  EXPECT_THROW(EncodedDataset::FromRows({"a"}, {{2}}, {0}), DataError);
  EXPECT_THROW(EncodedDataset::FromRows({"a"}, {{1}}, {3}), DataError);
  const auto d = EncodedDataset::FromRows({"a", "b"}, {{0, 1}, {1, 1}}, {0, 1});
  EXPECT_EQ(d.ContentDigest(),
            EncodedDataset::FromRows({"a", "b"}, {{0, 1}, {1, 1}}, {0, 1})
                .ContentDigest());
  EXPECT_NE(d.ContentDigest(),
            EncodedDataset::FromRows({"a", "b"}, {{0, 1}, {1, 1}}, {1, 1})
                .ContentDigest());
}

TEST(GroupTableTest, JointProportions) {
  const auto d = EncodedDataset::FromRows(
      {"g"}, {{1}, {1}, {0}, {0}, {0}, {0}, {0}, {0}}, {1, 0, 1, 1, 0, 0, 0, 0});
  const auto t = ComputeGroupTargetTable(d, "g");
  EXPECT_DOUBLE_EQ(t.joint[1][1], 0.125);
  EXPECT_DOUBLE_EQ(t.joint[0][1], 0.25);
  EXPECT_DOUBLE_EQ(t.target_rate[1], 0.5);
  EXPECT_DOUBLE_EQ(t.target_rate[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.group_share[0], 0.75);
  const auto c = EncodedDataset::FromRows({"g"}, {{1}, {1}}, {1, 0});
  EXPECT_THROW(ComputeGroupTargetTable(c, "g"), DataError);
  EXPECT_THROW(ComputeGroupTargetTable(d, "h"), DataError);
}

// Bundled data.

TEST(BundledDataTest, AdultLoadsWithPublishedGroupRates) {
  const auto schema =
      SchemaConfig::FromFile(std::string(SSIE_SCHEMA_DIR) + "/adult.schema.json");
  const auto d = LoadCsv(std::string(SSIE_DATA_DIR) + "/adult.data", schema);
  EXPECT_EQ(d.rows(), 30162u);
  EXPECT_EQ(d.provenance().rows_missing, 2399);
  EXPECT_EQ(d.provenance().source_digests.front().substr(0, 16),
            "5b00264637dbfec3");
  const auto t = ComputeGroupTargetTable(d, "sex=Female");
  // Male: joint about 0.20 at a 30% rate; female: about 0.04 at 12%.
  EXPECT_NEAR(t.joint[0][1], 0.20, 0.015);
  EXPECT_NEAR(t.target_rate[0], 0.30, 0.02);
  EXPECT_NEAR(t.joint[1][1], 0.04, 0.01);
  EXPECT_NEAR(t.target_rate[1], 0.12, 0.02);
}

TEST(BundledDataTest, AdultTrainAndTestMerge) {
  const auto schema =
      SchemaConfig::FromFile(std::string(SSIE_SCHEMA_DIR) + "/adult.schema.json");
  const auto d = LoadCsv(
      std::vector<std::string>{std::string(SSIE_DATA_DIR) + "/adult.data",
                               std::string(SSIE_DATA_DIR) + "/adult.test"},
      schema);
  EXPECT_EQ(d.rows(), 45222u);
}

TEST(BundledDataTest, CompasFiltersApplied) {
  const auto schema = SchemaConfig::FromFile(std::string(SSIE_SCHEMA_DIR) +
                                             "/compas.schema.json");
  const auto d =
      LoadCsv(std::string(SSIE_DATA_DIR) + "/compas-scores-two-years.csv", schema);
  EXPECT_EQ(d.rows(), 6172u);
  EXPECT_EQ(d.provenance().rows_read, 7214);
  const auto t = ComputeGroupTargetTable(d, "race=nonwhite");
  EXPECT_GT(t.group_share[1], 0.5);  // nonwhite is the majority here
}

}  // namespace
}  // namespace ssie
