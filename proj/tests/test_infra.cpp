#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "pgdpo/csv.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/parallel.hpp"

using namespace pgdpo;

TEST_CASE("counter RNG is a pure function of its coordinates") {
    CounterRng a(42, StreamTag::Brownian), b(42, StreamTag::Brownian), c(42, StreamTag::Anchors);
    CHECK(a.uniform(1, 2, 3) == b.uniform(1, 2, 3));
    CHECK(a.uniform(1, 2, 3) != c.uniform(1, 2, 3));
    CHECK(a.uniform(1, 2, 3) != a.uniform(1, 2, 4));
    double mean = 0, var = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = a.normal(i, 0, 0);
        mean += z / n;
        var += z * z / n;
    }
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform(i, 7, 7);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("noise substeps reproduce the refined Brownian path") {
    NoiseStream fine(9, 3, false, 1), coarse(9, 3, false, 2);
    Vec a(2), b(2), c(2);
    const double dt = 0.1;
    coarse.increments(0, 2 * dt, a);
    fine.increments(0, dt, b);
    fine.increments(1, dt, c);
    CHECK((a - (b + c)).norm() <= 1e-15);
    NoiseStream anti(9, 3, true, 1);
    Vec d(2);
    anti.increments(0, dt, d);
    CHECK((d + b).norm() == 0.0);
    NoiseStream p0 = batch_stream(9, 0, true), p1 = batch_stream(9, 1, true);
    p0.increments(5, dt, b);
    p1.increments(5, dt, c);
    CHECK((b + c).norm() == 0.0);
}

TEST_CASE("shared-prefix streams agree only on the prefix") {
    const NoiseStream a = NoiseStream(1, 10).with_shared_prefix(99, 4);
    const NoiseStream b = NoiseStream(1, 11).with_shared_prefix(99, 4);
    Vec ea(2), eb(2);
    a.increments(3, 0.1, ea);
    b.increments(3, 0.1, eb);
    CHECK((ea - eb).norm() == 0.0);
    a.increments(4, 0.1, ea);
    b.increments(4, 0.1, eb);
    CHECK((ea - eb).norm() > 0.0);
}

TEST_CASE("parallel_for is independent of the worker count") {
    std::vector<double> r1(1000), r8(1000);
    set_worker_count(1);
    parallel_for(r1.size(), [&](std::size_t i) { r1[i] = std::sin(i * 0.1); });
    set_worker_count(8);
    parallel_for(r8.size(), [&](std::size_t i) { r8[i] = std::sin(i * 0.1); });
    CHECK(r1 == r8);
    CHECK(pairwise_sum(r1.data(), r1.size()) == pairwise_sum(r8.data(), r8.size()));
    std::string msg;
    try {
        parallel_for(100, [](std::size_t i) {
            if (i == 30 || i == 70) throw std::runtime_error("index " + std::to_string(i));
        });
    } catch (const std::exception& e) {
        msg = e.what();
    }
    CHECK(msg == "index 30");
    set_worker_count(1);
}

TEST_CASE("pairwise sums") {
    std::vector<double> v(1001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v.data(), v.size()) == 500500.0);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
    Mat m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    CHECK(pairwise_column_sum(m) == Vec((Vec(2) << 6, 15).finished()));
}

TEST_CASE("csv writer header, hash line and cell count") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(format_double(0.1) == "0.10000000000000001");
    const std::string path = "infra_test.csv";
    {
        CsvWriter w(path, {"a", "b"}, 0xabcull, 7);
        w << 1.5 << "x";
        w.end_row();
        w << 2;
        CHECK_THROWS(w.end_row());
    }
    std::ifstream is(path);
    std::string l1, l2, l3;
    std::getline(is, l1);
    std::getline(is, l2);
    std::getline(is, l3);
    CHECK(l1 == "# config_hash=0000000000000abc seed=7");
    CHECK(l2 == "a,b");
    CHECK(l3 == "1.5,x");
    std::filesystem::remove(path);
}
