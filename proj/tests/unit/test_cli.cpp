#include "floral/dataset.hpp"
#include "floral/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace floral;
using namespace test_support;

namespace {

std::string q(const fs::path &p) { return "\"" + p.string() + "\""; }

std::size_t line_count(const std::string &text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// gen-data, split and poison into `dir`; returns nothing, leaves train.csv and test.csv.
void prepare(const TempDir &dir, double fraction) {
    REQUIRE(run_cli("gen-data moons --n 200 --noise 0.2 --seed 2 --out " + q(dir / "all.csv")).exit_code == 0);
    REQUIRE(run_cli("split --in " + q(dir / "all.csv") + " --train-size 80 --seed 2 --out-train " +
                    q(dir / "clean.csv") + " --out-test " + q(dir / "test.csv"))
                .exit_code == 0);
    REQUIRE(run_cli("poison --in " + q(dir / "clean.csv") + " --fraction " + format_double(fraction) +
                    " --seed 2 --out " + q(dir / "train.csv"))
                .exit_code == 0);
}

std::string train_args(const TempDir &dir) {
    return "train --data " + q(dir / "train.csv") + " --test " + q(dir / "test.csv") +
           " --rounds 40 --eta 0.01 --seed 3";
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("gen-data writes the requested rows deterministically") {
        TempDir dir;
        REQUIRE(run_cli("gen-data moons --n 2000 --noise 0.2 --seed 7 --out " + q(dir / "a.csv")).exit_code == 0);
        REQUIRE(run_cli("gen-data moons --n 2000 --noise 0.2 --seed 7 --out " + q(dir / "b.csv")).exit_code == 0);
        const std::string a = read_file(dir / "a.csv");
        CHECK(line_count(a) == 2001);
        CHECK(a == read_file(dir / "b.csv"));
        CHECK(load_csv(dir / "a.csv", {.header = true}) == generate_moons(2000, 0.2, 7));
        CHECK(run_cli("gen-data moons --n 1 --out " + q(dir / "c.csv")).exit_code == 2);
        CHECK(run_cli("gen-data spirals --out " + q(dir / "c.csv")).exit_code == 2);
        REQUIRE(run_cli("gen-data blobs --per-class 10 --classes 3 --seed 1 --out " + q(dir / "blobs.csv")).exit_code ==
                0);
        CHECK(load_multiclass_csv(dir / "blobs.csv", {.header = true}).num_classes == 3);
    }

    TEST_CASE("poison validates the fraction and matches the library") {
        TempDir dir;
        REQUIRE(run_cli("gen-data moons --n 500 --seed 4 --out " + q(dir / "clean.csv")).exit_code == 0);
        CHECK(run_cli("poison --in " + q(dir / "clean.csv") + " --fraction 1.5 --out " + q(dir / "p.csv")).exit_code ==
              2);
        CHECK_FALSE(fs::exists(dir / "p.csv"));

        REQUIRE(run_cli("poison --in " + q(dir / "clean.csv") + " --fraction 0 --out " + q(dir / "zero.csv")).exit_code ==
                0);
        const Dataset zero = load_csv(dir / "zero.csv", {.header = true});
        CHECK(zero.poisoned_indices.empty());
        REQUIRE(zero.clean_labels.has_value());

        REQUIRE(run_cli("poison --in " + q(dir / "clean.csv") + " --fraction 0.05 --seed 9 --out " + q(dir / "p.csv"))
                    .exit_code == 0);
        const Dataset p = load_csv(dir / "p.csv", {.header = true});
        CHECK(p.poisoned_indices.size() == 25);
        const Dataset lib = poison_by_boundary_distance(generate_moons(500, 0.2, 4), 0.05, 9);
        CHECK(p == lib);
        CHECK(run_cli("poison --in " + q(dir / "missing.csv") + " --fraction 0.1 --out " + q(dir / "x.csv")).exit_code ==
              2);
    }

    TEST_CASE("split partitions the rows") {
        TempDir dir;
        REQUIRE(run_cli("gen-data moons --n 50 --seed 1 --out " + q(dir / "all.csv")).exit_code == 0);
        REQUIRE(run_cli("split --in " + q(dir / "all.csv") + " --train-size 30 --seed 5 --out-train " +
                        q(dir / "tr.csv") + " --out-test " + q(dir / "te.csv"))
                    .exit_code == 0);
        CHECK(load_csv(dir / "tr.csv", {.header = true}).size() == 30);
        CHECK(load_csv(dir / "te.csv", {.header = true}).size() == 20);
        CHECK(run_cli("split --in " + q(dir / "all.csv") + " --train-size 60 --out-train " + q(dir / "tr.csv") +
                      " --out-test " + q(dir / "te.csv"))
                  .exit_code == 2);
    }

    TEST_CASE("train reports accuracy and writes its outputs") {
        TempDir dir;
        prepare(dir, 0.1);
        const CliResult r = run_cli(train_args(dir) + " --out-model " + q(dir / "m.json") + " --out-metrics " +
                                    q(dir / "m.csv"));
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find("best_accuracy=") != std::string::npos);
        CHECK(r.out.find("last_accuracy=") != std::string::npos);
        CHECK(fs::exists(dir / "m.json"));
        CHECK(read_metrics_csv(dir / "m.csv").size() == 4);
    }

    TEST_CASE("zero flips and vanilla agree byte for byte") {
        TempDir dir;
        prepare(dir, 0.1);
        REQUIRE(run_cli(train_args(dir) + " --k 0 --out-metrics " + q(dir / "k0.csv")).exit_code == 0);
        REQUIRE(run_cli(train_args(dir) + " --vanilla --out-metrics " + q(dir / "v.csv")).exit_code == 0);
        CHECK(read_file(dir / "k0.csv") == read_file(dir / "v.csv"));
    }

    TEST_CASE("train rejects bad argument combinations") {
        TempDir dir;
        prepare(dir, 0.1);
        CHECK(run_cli(train_args(dir) + " --vanilla --budget-B 4").exit_code == 2);
        CHECK(run_cli(train_args(dir) + " --vanilla --k 2").exit_code == 2);
        CHECK(run_cli(train_args(dir) + " --k 5 --budget-B 2").exit_code == 2);
        CHECK(run_cli(train_args(dir) + " --k lots").exit_code == 2);
        CHECK(run_cli(train_args(dir) + " --C -1").exit_code == 2);
        CHECK(run_cli(train_args(dir) + " --projection magic").exit_code == 2);
    }

    TEST_CASE("non-converging projection exits with the numerical code") {
        TempDir dir;
        prepare(dir, 0.1);
        CHECK(run_cli(train_args(dir) + " --projection fixed-point --max-iter 1 --eps 1e-300 --fallback-cap 0")
                  .exit_code == 3);
    }

    TEST_CASE("experiment subcommand") {
        TempDir dir;
        CHECK(run_cli("experiment " + q(fs::path(FIXTURE_DIR) / "sweep_bad.cfg")).exit_code == 2);
        write_file(dir / "ok.cfg", "generate_n = 150\ntrain_n = 50\nrounds = 20\nmethods = vanilla\noutput_dir = " +
                                       (dir / "out").string() + "\n");
        const CliResult r = run_cli("experiment " + q(dir / "ok.cfg") + " --jobs 2");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("summary=") != std::string::npos);
        CHECK(fs::exists(dir / "out" / "summary.csv"));
    }
}
