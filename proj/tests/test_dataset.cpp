#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "pardinus/dataset.hpp"
#include "pardinus/synth.hpp"

using namespace pardinus;
namespace fs = std::filesystem;

namespace {

DatasetManifest make_manifest(std::size_t n_empty, std::size_t n_animal) {
    DatasetManifest m;
    for (std::size_t i = 0; i < n_empty; ++i)
        m.entries.push_back({"e" + std::to_string(i), Label::empty, Split::unassigned});
    for (std::size_t i = 0; i < n_animal; ++i)
        m.entries.push_back({"a" + std::to_string(i), Label::animal, Split::unassigned});
    return m;
}

// minimal record for balance tests: id makes duplication detectable
struct Item {
    int id;
    Label label;
    int cluster;
};

std::vector<Item> balanced(const std::vector<Item>& in, BalanceMode mode, std::uint64_t seed) {
    return balance(
        in, mode, seed, [](const Item& d) { return d.label; },
        [](const Item& d) { return d.cluster; });
}

} // namespace

TEST_CASE("split_dataset assigns 60/20/20 stratified by label", "[dataset]") {
    SECTION("exact division at 10 per label") {
        const DatasetManifest out = split_dataset(make_manifest(10, 10), 1);
        for (Label l : {Label::empty, Label::animal}) {
            CHECK(out.count(Split::train, l) == 6);
            CHECK(out.count(Split::val, l) == 2);
            CHECK(out.count(Split::test, l) == 2);
        }
    }

    SECTION("same seed twice gives an identical assignment") {
        const DatasetManifest a = split_dataset(make_manifest(37, 13), 99);
        const DatasetManifest b = split_dataset(make_manifest(37, 13), 99);
        for (std::size_t i = 0; i < a.entries.size(); ++i)
            CHECK(a.entries[i].split == b.entries[i].split);
        const DatasetManifest c = split_dataset(make_manifest(37, 13), 100);
        bool any_differs = false;
        for (std::size_t i = 0; i < a.entries.size(); ++i)
            any_differs |= a.entries[i].split != c.entries[i].split;
        CHECK(any_differs);
    }

    SECTION("paper-scale counts stay within one item of 60/20/20") {
        const DatasetManifest out = split_dataset(make_manifest(37503, 8225), 7);
        const std::size_t train = out.count(Split::train);
        const std::size_t val = out.count(Split::val);
        const std::size_t test = out.count(Split::test);
        CHECK(train + val + test == 45728);
        CHECK(std::llabs((long long)train - 27437) <= 2); // two labels, one rounding each
        CHECK(std::llabs((long long)val - 9146) <= 2);
        CHECK(std::llabs((long long)test - 9146) <= 2);
    }

    SECTION("partition property across odd sizes") {
        for (auto [ne, na] : {std::pair<std::size_t, std::size_t>{11, 3}, {101, 49}, {5, 23}}) {
            const DatasetManifest out = split_dataset(make_manifest(ne, na), 3);
            CHECK(out.count(Split::unassigned) == 0);
            for (Label l : {Label::empty, Label::animal}) {
                const double n = double(l == Label::empty ? ne : na);
                CHECK(std::fabs(double(out.count(Split::train, l)) - 0.6 * n) <= 1.0);
                CHECK(std::fabs(double(out.count(Split::val, l)) - 0.2 * n) <= 1.0);
                CHECK(std::fabs(double(out.count(Split::test, l)) - 0.2 * n) <= 1.0);
            }
        }
    }

    SECTION("already-assigned entries are rejected") {
        DatasetManifest m = make_manifest(4, 4);
        m.entries[2].split = Split::train;
        CHECK_THROWS_AS(split_dataset(m, 1), AlreadySplit);
    }
}

TEST_CASE("manifest CSV round trip", "[dataset]") {
    const fs::path dir = fs::temp_directory_path() / "pardinus_dataset_tests";
    fs::create_directories(dir);
    const std::string path = (dir / "manifest.csv").string();

    DatasetManifest m = split_dataset(make_manifest(9, 4), 5);
    save_manifest(m, path);
    const DatasetManifest loaded = load_manifest(path);
    REQUIRE(loaded.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(loaded.entries[i].path == m.entries[i].path);
        CHECK(loaded.entries[i].label == m.entries[i].label);
        CHECK(loaded.entries[i].split == m.entries[i].split);
    }

    SECTION("duplicate paths are rejected") {
        std::ofstream out(path, std::ios::trunc);
        out << "path,label,split\nx.png,empty,train\nx.png,animal,test\n";
        out.close();
        CHECK_THROWS_AS(load_manifest(path), IoError);
    }

    SECTION("bad header is rejected") {
        std::ofstream out(path, std::ios::trunc);
        out << "file,label\n";
        out.close();
        CHECK_THROWS_AS(load_manifest(path), IoError);
    }

    CHECK_THROWS_AS(load_manifest((dir / "missing.csv").string()), FileNotFound);
}

TEST_CASE("balance undersamples empties only", "[dataset]") {
    SECTION("already balanced input is unchanged under global") {
        std::vector<Item> items;
        for (int i = 0; i < 100; ++i) items.push_back({i, Label::empty, 0});
        for (int i = 0; i < 100; ++i) items.push_back({100 + i, Label::animal, 0});
        const auto out = balanced(items, BalanceMode::global, 1);
        CHECK(out.size() == 200);
    }

    SECTION("3:1 imbalance reduces to equality") {
        std::vector<Item> items;
        for (int i = 0; i < 300; ++i) items.push_back({i, Label::empty, 0});
        for (int i = 0; i < 100; ++i) items.push_back({300 + i, Label::animal, 0});
        const auto out = balanced(items, BalanceMode::global, 1);
        std::size_t ne = 0, na = 0;
        for (const auto& d : out) (d.label == Label::empty ? ne : na)++;
        CHECK(ne == 100);
        CHECK(na == 100);
    }

    SECTION("per-cluster balances within clusters and never oversamples") {
        std::vector<Item> items;
        int id = 0;
        for (int i = 0; i < 10; ++i) items.push_back({id++, Label::empty, 0});  // A: 10E
        for (int i = 0; i < 2; ++i) items.push_back({id++, Label::animal, 0});  // A: 2A
        for (int i = 0; i < 4; ++i) items.push_back({id++, Label::empty, 1});   // B: 4E
        for (int i = 0; i < 8; ++i) items.push_back({id++, Label::animal, 1});  // B: 8A
        const auto out = balanced(items, BalanceMode::per_cluster, 3);
        std::size_t a_e = 0, a_a = 0, b_e = 0, b_a = 0;
        for (const auto& d : out) {
            if (d.cluster == 0) (d.label == Label::empty ? a_e : a_a)++;
            else (d.label == Label::empty ? b_e : b_a)++;
        }
        CHECK(a_e == 2);
        CHECK(a_a == 2);
        CHECK(b_e == 4); // animal majority: nothing removed
        CHECK(b_a == 8);
    }

    SECTION("animal items are never touched, nothing is duplicated") {
        Rng rng(77);
        std::vector<Item> items;
        for (int i = 0; i < 200; ++i)
            items.push_back({i, rng.next_double() < 0.7 ? Label::empty : Label::animal,
                             int(rng.next_below(4))});
        for (BalanceMode mode : {BalanceMode::none, BalanceMode::global, BalanceMode::per_cluster}) {
            const auto out = balanced(items, mode, 5);
            std::set<int> seen;
            for (const auto& d : out) CHECK(seen.insert(d.id).second); // no duplicates
            std::size_t animals_in = 0, animals_out = 0;
            for (const auto& d : items) animals_in += d.label == Label::animal;
            for (const auto& d : out) animals_out += d.label == Label::animal;
            CHECK(animals_in == animals_out);
        }
    }

    SECTION("missing class is rejected") {
        std::vector<Item> items = {{0, Label::empty, 0}, {1, Label::empty, 0}};
        CHECK_THROWS_AS(balanced(items, BalanceMode::global, 1), EmptyClass);
        CHECK_NOTHROW(balanced(items, BalanceMode::none, 1)); // none skips the check
    }
}

TEST_CASE("synthetic corpus generation", "[dataset]") {
    const fs::path dir = fs::temp_directory_path() / "pardinus_synth_tests";
    fs::remove_all(dir);

    SynthSpec spec;
    spec.n_empty = 14;
    spec.n_animal = 7;
    spec.width = 32;
    spec.height = 32;
    spec.n_scene_types = 7;

    SECTION("fixed seed regenerates a byte-identical corpus") {
        const SynthResult a = synth_generate(spec, 42, (dir / "a").string());
        const SynthResult b = synth_generate(spec, 42, (dir / "b").string());
        REQUIRE(a.manifest.entries.size() == b.manifest.entries.size());
        for (std::size_t i = 0; i < a.manifest.entries.size(); ++i) {
            const auto pa = dir / "a" / a.manifest.entries[i].path;
            const auto pb = dir / "b" / b.manifest.entries[i].path;
            std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
            const std::string ba((std::istreambuf_iterator<char>(fa)),
                                 std::istreambuf_iterator<char>());
            const std::string bb((std::istreambuf_iterator<char>(fb)),
                                 std::istreambuf_iterator<char>());
            CHECK(ba == bb);
            CHECK(!ba.empty());
        }
    }

    SECTION("scene types distribute uniformly within one item") {
        const SynthResult r = synth_generate(spec, 1, (dir / "c").string());
        std::vector<int> per_scene(7, 0);
        for (std::size_t i = 0; i < r.manifest.entries.size(); ++i)
            if (r.manifest.entries[i].label == Label::empty) ++per_scene[r.scene_of[i]];
        const auto [lo, hi] = std::minmax_element(per_scene.begin(), per_scene.end());
        CHECK(*hi - *lo <= 1);
    }

    SECTION("animal differs from its background only inside the blob box") {
        Rng rng(555);
        const ImageTensor background = synth_background(2, 64, 48, rng);
        BlobBox box;
        const ImageTensor animal = synth_stamp_blob(background, rng, &box);
        REQUIRE(box.x1 > box.x0);
        REQUIRE(box.y1 > box.y0);
        bool changed_inside = false;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 48; ++y)
                for (int x = 0; x < 64; ++x) {
                    const bool inside =
                        x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1;
                    if (!inside)
                        CHECK(animal.at(c, y, x) == background.at(c, y, x));
                    else if (animal.at(c, y, x) != background.at(c, y, x))
                        changed_inside = true;
                }
        CHECK(changed_inside);
    }

    SECTION("blob area stays within 5-20% of the image") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const ImageTensor background = synth_background(int(seed % 7), 96, 64, rng);
            ImageTensor animal = synth_stamp_blob(background, rng);
            std::size_t diff = 0;
            for (std::size_t i = 0; i < animal.data.size(); ++i)
                diff += animal.data[i] != background.data[i];
            const double frac = double(diff / 3) / double(96 * 64);
            CHECK(frac > 0.02); // ellipse area minus clamping slack
            CHECK(frac < 0.25);
        }
    }

    SECTION("invalid dims are rejected") {
        SynthSpec bad = spec;
        bad.width = 30;
        CHECK_THROWS_AS(synth_generate(bad, 1, (dir / "d").string()), InvalidDimensions);
        bad = spec;
        bad.n_empty = 0;
        CHECK_THROWS_AS(synth_generate(bad, 1, (dir / "e").string()), InvalidDimensions);
    }
}
