#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rascore/dataset.hpp"
#include "rascore/synthetic.hpp"

using namespace rascore;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("rascore_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    return path.string();
}

std::string make_dummy_image(const fs::path& dir, const std::string& name = "img.png") {
    const GrayImage image(8, 8, 0.5);
    const std::string path = (dir / name).string();
    save_gray_png(image, path);
    return name;
}

// Independent clamp-then-sum oracle over a grade table.
double oracle_total(const SvdhScore& grades) {
    double total = 0.0;
    for (const auto& e : grades.erosion_entries) {
        int sum = 0;
        for (int c : e.components) sum += c;
        total += sum > 5 ? 5 : sum;
    }
    for (const auto& e : grades.jsn_entries) total += e.grade;
    return total;
}

}  // namespace

TEST_CASE("manifest: target stats come from the train split only") {
    TempDir dir;
    const std::string img = make_dummy_image(dir.path);
    write_file(dir.path / "m.csv",
               "id,image_path,target,split\n"
               "a," + img + ",10,train\n"
               "b," + img + ",20,train\n"
               "c," + img + ",15,validation\n"
               "d," + img + ",30,test\n");
    const Manifest manifest = load_manifest((dir.path / "m.csv").string(), Task::svdh);
    CHECK(manifest.records.size() == 4);
    CHECK(manifest.target_stats.mean == doctest::Approx(15.0));
    CHECK(manifest.target_stats.sd == doctest::Approx(5.0));  // population SD of {10,20}
    CHECK(manifest.split_records(Split::train).size() == 2);
    CHECK(manifest.split_records(Split::validation).size() == 1);
    CHECK(manifest.split_records(Split::test).size() == 1);
}

TEST_CASE("manifest parse errors carry the row number") {
    TempDir dir;
    const std::string img = make_dummy_image(dir.path);

    SUBCASE("wrong header") {
        const auto path = write_file(dir.path / "m.csv", "id,path,target,split\na," + img + ",1,train\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh),
                             doctest::Contains("header must be exactly"), IoError);
    }
    SUBCASE("unknown split token") {
        const auto path = write_file(dir.path / "m.csv",
                                     "id,image_path,target,split\n"
                                     "a," + img + ",1,train\n"
                                     "b," + img + ",2,holdout\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh), doctest::Contains("row 3"), IoError);
    }
    SUBCASE("duplicate id") {
        const auto path = write_file(dir.path / "m.csv",
                                     "id,image_path,target,split\n"
                                     "a," + img + ",1,train\n"
                                     "a," + img + ",2,train\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh),
                             doctest::Contains("duplicate id"), IoError);
    }
    SUBCASE("unreadable image path") {
        const auto path = write_file(dir.path / "m.csv",
                                     "id,image_path,target,split\na,missing.png,1,train\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh),
                             doctest::Contains("not readable"), IoError);
    }
    SUBCASE("non-numeric target") {
        const auto path = write_file(dir.path / "m.csv",
                                     "id,image_path,target,split\na," + img + ",abc,train\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh), doctest::Contains("row 2"), IoError);
    }
    SUBCASE("no training rows") {
        const auto path = write_file(dir.path / "m.csv",
                                     "id,image_path,target,split\na," + img + ",1,test\n");
        CHECK_THROWS_WITH_AS(load_manifest(path, Task::svdh),
                             doctest::Contains("no training rows"), IoError);
    }
}

TEST_CASE("manifest accepts the paper-sized split layout") {
    TempDir dir;
    const std::string img = make_dummy_image(dir.path);
    std::ostringstream csv;
    csv << "id,image_path,target,split\n";
    int id = 0;
    for (int i = 0; i < 2700; ++i) csv << "r" << id++ << "," << img << "," << i % 250 << ",train\n";
    for (int i = 0; i < 760; ++i) csv << "r" << id++ << "," << img << "," << i % 250 << ",validation\n";
    for (int i = 0; i < 358; ++i) csv << "r" << id++ << "," << img << "," << i % 250 << ",test\n";
    const auto path = write_file(dir.path / "m.csv", csv.str());
    const Manifest manifest = load_manifest(path, Task::svdh);
    CHECK(manifest.records.size() == 3818);
    CHECK(manifest.split_records(Split::train).size() == 2700);
    CHECK(manifest.split_records(Split::validation).size() == 760);
    CHECK(manifest.split_records(Split::test).size() == 358);
}

TEST_CASE("manifest loading is stable: same file, same membership") {
    TempDir dir;
    const std::string img = make_dummy_image(dir.path);
    const auto path = write_file(dir.path / "m.csv",
                                 "id,image_path,target,split\n"
                                 "a," + img + ",10,train\n"
                                 "b," + img + ",20,validation\n");
    const Manifest first = load_manifest(path, Task::bone_age);
    const Manifest second = load_manifest(path, Task::bone_age);
    REQUIRE(first.records.size() == second.records.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        CHECK(first.records[i].id == second.records[i].id);
        CHECK(first.records[i].split == second.records[i].split);
        CHECK(first.records[i].target == second.records[i].target);
    }
}

TEST_CASE("standardize and destandardize") {
    const Stats stats{15.0, 5.0};
    CHECK(standardize_target(15.0, stats) == 0.0);
    CHECK(standardize_target(20.0, stats) == 1.0);
    CHECK(standardize_target(47.0, stats) == doctest::Approx(6.4));
    CHECK(destandardize_target(standardize_target(123.25, stats), stats) ==
          doctest::Approx(123.25).epsilon(1e-12));
    CHECK_THROWS_AS(standardize_target(1.0, Stats{0.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(standardize_target(1.0, Stats{0.0, -1.0}), ConfigError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 280.0);
    for (int i = 0; i < 1000; ++i) {
        const double y = dist(rng);
        CHECK(std::abs(destandardize_target(standardize_target(y, stats), stats) - y) < 1e-6);
    }
}

TEST_CASE("synthetic phantoms are deterministic for a fixed seed") {
    const auto first = generate_synthetic(8, 64, 1234);
    const auto second = generate_synthetic(8, 64, 1234);
    REQUIRE(first.size() == 8);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].total == second[i].total);
        CHECK(first[i].image.pixels == second[i].image.pixels);  // bitwise
    }
    const auto other = generate_synthetic(8, 64, 1235);
    bool any_difference = false;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i].image.pixels != other[i].image.pixels) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("synthetic extremes: healthy renders to 0, saturated to 280") {
    const SvdhScore healthy = healthy_phantom_grades();
    CHECK(total_score(healthy) == 0.0);
    const GrayImage healthy_img = render_phantom(healthy, 64);
    // No lesions: a constant background canvas.
    for (double v : healthy_img.pixels) CHECK(v == healthy_img.pixels.front());

    const SvdhScore maxed = max_phantom_grades();
    CHECK(oracle_total(maxed) == 280.0);
    CHECK(total_score(maxed) == 280.0);
    const GrayImage max_img = render_phantom(maxed, 64);
    CHECK(max_img.pixels != healthy_img.pixels);
}

TEST_CASE("synthetic totals equal the oracle over the grade table (100 seeds)") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto samples = generate_synthetic(3, 32, seed);
        for (const PhantomSample& sample : samples) {
            CHECK(sample.total == oracle_total(sample.grades));
            CHECK(sample.total >= 0.0);
            CHECK(sample.total <= 280.0);
        }
    }
}

TEST_CASE("synthetic generator rejects bad arguments") {
    CHECK_THROWS_AS(generate_synthetic(0, 64, 1), ValidationError);
    CHECK_THROWS_AS(generate_synthetic(4, 16, 1), ValidationError);
}

TEST_CASE("phantom lesion area grows with the erosion grade") {
    SvdhScore low, high;
    low.erosion_entries.push_back({Hand::left, ErosionArea::pip2, {1}});
    high.erosion_entries.push_back({Hand::left, ErosionArea::pip2, {3, 2}});
    const GrayImage low_img = render_phantom(low, 64);
    const GrayImage high_img = render_phantom(high, 64);
    auto bright_area = [](const GrayImage& img) {
        std::size_t n = 0;
        for (double v : img.pixels) n += v > 0.9 ? 1 : 0;
        return n;
    };
    CHECK(bright_area(low_img) > 0);
    CHECK(bright_area(high_img) > bright_area(low_img));
}
