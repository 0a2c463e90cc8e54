#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "satpipe/errors.hpp"
#include "satpipe/patchio.hpp"

using namespace satpipe;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "satpipe_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Dataset small_synthetic(int per_class, std::uint64_t seed = 3) {
  return generate_synthetic(default_synthetic_spec(4, per_class), seed);
}

}  // namespace

TEST_CASE("satbin with zero records loads as an empty dataset") {
  Dataset ds;
  ds.scheme = ClassScheme::sat6();
  const auto bytes = encode_satbin(ds);
  CHECK(bytes.size() == 15);
  const auto back = decode_satbin(bytes);
  CHECK(back.empty());
  CHECK(back.scheme == ClassScheme::sat6());
}

TEST_CASE("satbin rejects a corrupted magic") {
  auto bytes = encode_satbin(small_synthetic(1));
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_satbin(bytes), FormatError);
}

TEST_CASE("satbin reports truncation with the byte offset") {
  auto bytes = encode_satbin(small_synthetic(2));
  bytes.resize(bytes.size() - 10);
  try {
    decode_satbin(bytes);
    FAIL("expected truncation");
  } catch (const TruncationError& e) {
    CHECK(e.offset() == bytes.size());
  }
}

TEST_CASE("satbin rejects labels outside the scheme") {
  auto ds = small_synthetic(1);
  auto bytes = encode_satbin(ds);
  bytes[15] = 4;  // first record label, scheme has 4 classes
  CHECK_THROWS_AS(decode_satbin(bytes), LabelError);
}

TEST_CASE("satbin header layout is little-endian") {
  auto ds = small_synthetic(1);
  const auto b = encode_satbin(ds);
  CHECK(std::string(b.begin(), b.begin() + 4) == "SATP");
  CHECK(b[4] == 1);
  CHECK((b[5] | (b[6] << 8)) == 28);
  CHECK((b[7] | (b[8] << 8)) == 28);
  CHECK(b[9] == 4);
  CHECK(b[10] == 4);
  CHECK(b[11] == 4);
  CHECK(b.size() == 15 + 4 * (1 + 3136));
}

TEST_CASE("save/load round trips") {
  SUBCASE("single all-zero patch") {
    Dataset ds;
    ds.patches.emplace_back();
    ds.labels.push_back(0);
    const auto path = temp_path("zero.satbin");
    save_dataset(ds, path);
    CHECK(load_dataset(path, DatasetFormat::kSatbin) == ds);
  }
  SUBCASE("SAT6 scheme is preserved") {
    auto ds = generate_synthetic(default_synthetic_spec(6, 2), 5);
    CHECK(ds.scheme == ClassScheme::sat6());
    const auto path = temp_path("sat6.satbin");
    save_dataset(ds, path);
    const auto back = load_dataset(path, DatasetFormat::kSatbin);
    CHECK(back.scheme.is_sat6());
    CHECK(back.scheme.name() == "SAT6");
  }
  SUBCASE("100 synthetic patches, byte-identical") {
    const auto ds = small_synthetic(25);
    const auto path = temp_path("hundred.satbin");
    save_dataset(ds, path);
    CHECK(load_dataset(path, DatasetFormat::kSatbin) == ds);
  }
  SUBCASE("10000 synthetic patches") {
    const auto ds = small_synthetic(2500, 11);
    const auto path = temp_path("tenk.satbin");
    save_dataset(ds, path);
    const auto back = load_dataset(path, DatasetFormat::kSatbin);
    CHECK(back.size() == 10000);
    CHECK(back == ds);
  }
  SUBCASE("csv") {
    const auto ds = small_synthetic(3);
    const auto path = temp_path("three.csv");
    save_dataset(ds, path, DatasetFormat::kCsv);
    const auto back = load_dataset(path, DatasetFormat::kCsv);
    CHECK(back == ds);
  }
}

TEST_CASE("csv header must follow label,px_0..px_3135") {
  const auto path = temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "label,px_1\n0,3\n";
  }
  CHECK_THROWS_AS(load_dataset(path, DatasetFormat::kCsv), FormatError);
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(load_dataset(temp_path("does_not_exist.satbin"), DatasetFormat::kSatbin), IoError);
}

TEST_CASE("synthetic generation") {
  SUBCASE("zero noise, period 1 gives flat patches at the band mean") {
    SyntheticSpec spec;
    spec.patches_per_class = 3;
    for (int c = 0; c < 2; ++c) spec.classes.push_back({{100, 100, 100, 100}, 0.0, 1});
    const auto ds = generate_synthetic(spec, 1);
    CHECK(ds.size() == 6);
    for (const auto& p : ds.patches)
      for (auto s : p.samples()) REQUIRE(s == 100);
  }
  SUBCASE("deterministic per seed") {
    CHECK(small_synthetic(5, 9) == small_synthetic(5, 9));
    CHECK_FALSE(small_synthetic(5, 9) == small_synthetic(5, 10));
  }
  SUBCASE("class NIR means follow the spec") {
    SyntheticSpec spec;
    spec.patches_per_class = 20;
    spec.classes.push_back({{100, 100, 100, 200}, 10.0, 4});
    spec.classes.push_back({{100, 100, 100, 50}, 10.0, 4});
    const auto ds = generate_synthetic(spec, 2);
    double nir[2] = {0, 0};
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (auto s : ds.patches[i].plane(Band::kNir)) nir[ds.labels[i]] += s;
    CHECK(nir[0] > nir[1]);
  }
  SUBCASE("period 2 produces a checkerboard") {
    SyntheticSpec spec;
    spec.patches_per_class = 1;
    spec.classes.assign(2, {{100, 100, 100, 100}, 0.0, 2});
    const auto p = generate_synthetic(spec, 4).patches.front();
    CHECK(std::abs(int(p.at(Band::kRed, 0, 0)) - 100) == 30);
    CHECK(p.at(Band::kRed, 0, 0) != p.at(Band::kRed, 0, 1));
    CHECK(p.at(Band::kRed, 0, 0) == p.at(Band::kRed, 1, 1));
  }
  SUBCASE("invalid specs are rejected") {
    SyntheticSpec spec;
    spec.classes.push_back({{100, 100, 100, 100}, 0.0, 1});
    CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
    spec.classes.push_back({{300, 100, 100, 100}, 0.0, 1});
    CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
  }
}

TEST_CASE("shuffle_split") {
  const auto ds = small_synthetic(25);
  SUBCASE("sizes follow floor(fraction * n)") {
    Dataset ten = ds;
    ten.patches.resize(10);
    ten.labels.resize(10);
    auto [train, test] = shuffle_split(ten, 0.8, 1);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
  }
  SUBCASE("partition is disjoint and complete") {
    auto [train_idx, test_idx] = shuffle_split_indices(ds.size(), 0.7, 42);
    std::vector<int> seen(ds.size(), 0);
    for (auto i : train_idx) ++seen[i];
    for (auto i : test_idx) ++seen[i];
    for (int s : seen) CHECK(s == 1);

    auto [train, test] = shuffle_split(ds, 0.7, 42);
    std::map<std::vector<std::uint8_t>, int> counts;
    for (const auto& p : ds.patches) ++counts[{p.samples().begin(), p.samples().end()}];
    for (const auto* part : {&train, &test})
      for (const auto& p : part->patches) --counts[{p.samples().begin(), p.samples().end()}];
    for (const auto& [k, v] : counts) CHECK(v == 0);
  }
  SUBCASE("deterministic order per seed") {
    CHECK(shuffle_split(ds, 0.5, 3).first == shuffle_split(ds, 0.5, 3).first);
    CHECK_FALSE(shuffle_split(ds, 0.5, 3).first == shuffle_split(ds, 0.5, 4).first);
  }
  SUBCASE("four-fifths split of a large set") {
    auto [train, test] = shuffle_split_indices(500000, 0.8, 7);
    CHECK(train.size() == 400000);
    CHECK(test.size() == 100000);
  }
  SUBCASE("fewer than two patches is a size error") {
    Dataset one = ds;
    one.patches.resize(1);
    one.labels.resize(1);
    CHECK_THROWS_AS(shuffle_split(one, 0.8, 1), SizeError);
  }
}
