#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "fedhkd/data.hpp"
#include "fedhkd/error.hpp"
#include "fedhkd/rng.hpp"

using namespace fedhkd;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fedhkd_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

// Reference IDX fixture: 2 images of 2x2 pixels and 2 labels, assembled byte
// by byte straight from the format definition.
std::vector<unsigned char> image_fixture() {
  std::vector<unsigned char> bytes;
  push_u32_be(bytes, 0x00000803);
  push_u32_be(bytes, 2);  // count
  push_u32_be(bytes, 2);  // rows
  push_u32_be(bytes, 2);  // cols
  for (unsigned char p : {0, 255, 128, 64, 10, 20, 30, 40})
    bytes.push_back(p);
  return bytes;
}

std::vector<unsigned char> label_fixture() {
  std::vector<unsigned char> bytes;
  push_u32_be(bytes, 0x00000801);
  push_u32_be(bytes, 2);
  bytes.push_back(0);
  bytes.push_back(1);
  return bytes;
}

// Dataset whose inputs identify the sample: row i holds the value i. Lets the
// partition tests track every sample exactly.
Dataset traceable_dataset(std::size_t count, std::size_t classes) {
  Dataset d;
  d.class_count = classes;
  d.inputs = Tensor({count, 1});
  for (std::size_t i = 0; i < count; ++i) {
    d.inputs.at(i, 0) = static_cast<double>(i);
    d.labels.push_back(i % classes);
  }
  return d;
}

}  // namespace

TEST_CASE("gen_blobs counts and determinism") {
  const Dataset d = gen_blobs(2, 3, 5, 0.7, 42);
  CHECK(d.size() == 10);
  const auto counts = d.class_counts();
  CHECK(counts[0] == 5);
  CHECK(counts[1] == 5);

  const Dataset again = gen_blobs(2, 3, 5, 0.7, 42);
  CHECK(d.inputs.values() == again.inputs.values());
  CHECK(d.labels == again.labels);

  const Dataset other = gen_blobs(2, 3, 5, 0.7, 43);
  CHECK(d.inputs.values() != other.inputs.values());
}

TEST_CASE("gen_blobs zero spread collapses classes onto their centers") {
  const Dataset d = gen_blobs(3, 4, 4, 0.0, 7);
  for (std::size_t j = 0; j < 3; ++j) {
    // All samples of one class identical.
    std::size_t first = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] != j) continue;
      if (first == static_cast<std::size_t>(-1)) {
        first = i;
        continue;
      }
      const auto a = d.inputs.row_span(first);
      const auto b = d.inputs.row_span(i);
      for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == b[c]);
    }
  }
  // Class centers distinct.
  const auto c0 = d.inputs.row_span(0);
  const auto c1 = d.inputs.row_span(4);
  const auto c2 = d.inputs.row_span(8);
  CHECK(std::vector<double>(c0.begin(), c0.end()) !=
        std::vector<double>(c1.begin(), c1.end()));
  CHECK(std::vector<double>(c1.begin(), c1.end()) !=
        std::vector<double>(c2.begin(), c2.end()));
}

TEST_CASE("gen_blobs keeps centers distinct with more classes than dims") {
  const Dataset d = gen_blobs(5, 2, 3, 0.0, 1);  // base-3 digit placement
  std::set<std::vector<double>> centers;
  for (std::size_t j = 0; j < 5; ++j) {
    const auto row = d.inputs.row_span(j * 3);
    centers.insert(std::vector<double>(row.begin(), row.end()));
  }
  CHECK(centers.size() == 5);
}

TEST_CASE("single-client partition keeps the whole dataset") {
  const Dataset d = traceable_dataset(20, 4);
  PartitionSpec spec;
  spec.client_count = 1;
  spec.concentration = 0.5;
  spec.seed = 1;
  const auto parts = partition_dirichlet(d, spec);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].size() == 20);
}

TEST_CASE("equal-size partition conserves samples without duplicates") {
  Rng seeds(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t count = 40 + seeds.next_below(60);
    const std::size_t m = 3 + seeds.next_below(5);
    const Dataset d = traceable_dataset(count, 5);
    PartitionSpec spec;
    spec.client_count = m;
    spec.concentration = 0.3;
    spec.equal_size = true;
    spec.seed = seeds.next_u64();
    const auto parts = partition_dirichlet(d, spec);

    const std::size_t target = count / m;
    std::multiset<double> seen;
    for (const auto& p : parts) {
      CHECK(p.size() == target);
      for (std::size_t i = 0; i < p.size(); ++i)
        seen.insert(p.inputs.at(i, 0));
    }
    CHECK(seen.size() == target * m);
    // No duplicates: every identifier appears at most once.
    for (double v : seen) CHECK(seen.count(v) == 1);
  }
}

TEST_CASE("partition with fewer samples than clients fails") {
  const Dataset d = traceable_dataset(3, 2);
  PartitionSpec spec;
  spec.client_count = 5;
  CHECK_THROWS_AS(partition_dirichlet(d, spec), Error);
}

TEST_CASE("huge concentration gives near-uniform client distributions") {
  const Dataset d = gen_blobs(10, 2, 1000, 1.0, 5);
  const auto global_counts = d.class_counts();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PartitionSpec spec;
    spec.client_count = 10;
    spec.concentration = 1e6;
    spec.seed = seed;
    const auto parts = partition_dirichlet(d, spec);
    for (const auto& p : parts) {
      const auto counts = p.class_counts();
      for (std::size_t j = 0; j < 10; ++j) {
        const double local = double(counts[j]) / double(p.size());
        const double global = double(global_counts[j]) / double(d.size());
        CHECK(std::abs(local - global) <= 0.03);
      }
    }
  }
}

TEST_CASE("small concentration produces clients dominated by few classes") {
  const Dataset d = gen_blobs(10, 2, 100, 1.0, 6);
  int skewed_seeds = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PartitionSpec spec;
    spec.client_count = 10;
    spec.concentration = 0.2;
    spec.seed = seed;
    const auto parts = partition_dirichlet(d, spec);
    bool any_concentrated = false;
    for (const auto& p : parts) {
      auto counts = p.class_counts();
      std::sort(counts.begin(), counts.end(), std::greater<>());
      const double top2 = double(counts[0] + counts[1]);
      if (top2 / double(p.size()) >= 0.8) any_concentrated = true;
    }
    if (any_concentrated) ++skewed_seeds;
  }
  CHECK(skewed_seeds >= 8);
}

TEST_CASE("split_local cuts 75/25 with disjoint union") {
  const Dataset d = traceable_dataset(8, 2);
  const auto [train, test] = split_local(d, 3);
  CHECK(train.size() == 6);
  CHECK(test.size() == 2);

  std::multiset<double> ids;
  for (std::size_t i = 0; i < train.size(); ++i)
    ids.insert(train.inputs.at(i, 0));
  for (std::size_t i = 0; i < test.size(); ++i)
    ids.insert(test.inputs.at(i, 0));
  CHECK(ids.size() == 8);
  for (double v : ids) CHECK(ids.count(v) == 1);

  CHECK_THROWS_AS(split_local(traceable_dataset(3, 2), 1), Error);
}

TEST_CASE("split_local stratification matches per-class floor counts") {
  Rng seeds(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = gen_blobs(4, 2, 5 + seeds.next_below(20), 1.0,
                                seeds.next_u64());
    const auto [train, test] = split_local(d, seeds.next_u64());
    const auto full_counts = d.class_counts();
    const auto train_counts = train.class_counts();
    const auto test_counts = test.class_counts();
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(test_counts[j] == full_counts[j] / 4);
      CHECK(train_counts[j] == full_counts[j] - full_counts[j] / 4);
      if (full_counts[j] >= 4) {
        CHECK(train_counts[j] > 0);
        CHECK(test_counts[j] > 0);
      }
    }
  }
}

TEST_CASE("idx fixture parses to the expected dataset") {
  TempDir tmp;
  write_bytes(tmp.path / "images", image_fixture());
  write_bytes(tmp.path / "labels", label_fixture());

  const Dataset d = load_idx(tmp.path / "images", tmp.path / "labels");
  CHECK(d.size() == 2);
  CHECK(d.feature_dim() == 4);
  CHECK(d.labels[0] == 0);
  CHECK(d.labels[1] == 1);
  CHECK(d.inputs.at(0, 0) == 0.0);
  CHECK(d.inputs.at(0, 1) == 1.0);
  CHECK(d.inputs.at(0, 2) == doctest::Approx(128.0 / 255.0));
  CHECK(d.inputs.at(0, 3) == doctest::Approx(64.0 / 255.0));
  CHECK(d.inputs.at(1, 0) == doctest::Approx(10.0 / 255.0));
}

TEST_CASE("idx rejects bad magic, truncation, and count mismatch") {
  TempDir tmp;

  auto bad_magic = image_fixture();
  bad_magic[3] = 0x99;
  write_bytes(tmp.path / "bad_images", bad_magic);
  write_bytes(tmp.path / "labels", label_fixture());
  CHECK_THROWS_AS(load_idx(tmp.path / "bad_images", tmp.path / "labels"),
                  FormatError);

  auto truncated = image_fixture();
  truncated.resize(truncated.size() - 3);
  write_bytes(tmp.path / "trunc_images", truncated);
  CHECK_THROWS_AS(load_idx(tmp.path / "trunc_images", tmp.path / "labels"),
                  FormatError);

  auto fewer_labels = label_fixture();
  fewer_labels[7] = 1;  // count = 1
  fewer_labels.resize(9);
  write_bytes(tmp.path / "one_label", fewer_labels);
  write_bytes(tmp.path / "images", image_fixture());
  CHECK_THROWS_AS(load_idx(tmp.path / "images", tmp.path / "one_label"),
                  FormatError);
}

TEST_CASE("csv round trip restores exact values") {
  TempDir tmp;
  const Dataset d = gen_blobs(3, 4, 6, 1.3, 11);
  const auto path = tmp.path / "blobs.csv";
  save_csv(d, path);

  // Independent reader: parse with iostream/strtod only.
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0,x1,x2,x3,label");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == d.size());

  const Dataset back = load_csv(path);
  CHECK(back.size() == d.size());
  CHECK(back.class_count == d.class_count);
  CHECK(back.labels == d.labels);
  CHECK(back.inputs.values() == d.inputs.values());
}
