#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hazmon/cvt.hpp"
#include "hazmon/rng.hpp"

using namespace hazmon;
using Catch::Approx;

namespace {

double cvt_energy(const GeneratorSet& gens, const std::vector<Point2>& samples,
                  const std::vector<Segment>& edges, double alpha, double beta_density) {
    double total = 0.0;
    for (const auto& s : samples) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& g : gens.fixed) best = std::min(best, squared_distance(s, g));
        for (const auto& g : gens.adaptive) best = std::min(best, squared_distance(s, g));
        total += density(s, edges, alpha, beta_density) * best;
    }
    return total;
}

}  // namespace

TEST_CASE("density formula") {
    std::vector<Segment> edges{Segment({0, 0}, {0, 100})};
    CHECK(density({50, 50}, edges, 0.1, 0.0) == Approx(0.1));
    CHECK(density({0, 50}, edges, 0.1, 0.9) == Approx(0.1));
    CHECK(density({10, 50}, edges, 0.1, 0.9) == Approx(9.1));
    CHECK(density({123, 45}, {}, 0.7, 0.0) == Approx(0.7));
    CHECK_THROWS_AS(density({0, 0}, {}, 0.1, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(density({0, 0}, edges, 0.0, 0.9), std::invalid_argument);
}

TEST_CASE("single uniform generator settles at the domain center") {
    RectDomain dom(0, 1000, 0, 1000);
    CvtConfig cfg;
    cfg.beta_density = 0.0;
    cfg.seed = 5;
    GeneratorSet gens{{}, {{100, 900}}};
    CvtResult result = run_cvt(gens, {}, dom, cfg);
    REQUIRE(result.generators.adaptive.size() == 1);
    CHECK(result.generators.adaptive[0].x == Approx(500.0).margin(20.0));
    CHECK(result.generators.adaptive[0].y == Approx(500.0).margin(20.0));
}

TEST_CASE("fixed generators never move") {
    RectDomain dom(0, 1000, 0, 1000);
    CvtConfig cfg;
    cfg.seed = 9;
    std::vector<Segment> edges{Segment({200, 200}, {800, 800})};
    GeneratorSet gens{{{250, 250}, {750, 750}}, {{500, 100}, {100, 500}}};
    CvtResult result = run_cvt(gens, edges, dom, cfg);
    REQUIRE(result.generators.fixed.size() == 2);
    CHECK(result.generators.fixed[0].x == 250.0);
    CHECK(result.generators.fixed[0].y == 250.0);
    CHECK(result.generators.fixed[1].x == 750.0);
    CHECK(result.generators.fixed[1].y == 750.0);
    for (const auto& p : result.generators.adaptive) CHECK(dom.contains(p));
}

TEST_CASE("edge-weighted density pushes the generator away from the edge") {
    RectDomain dom(0, 1000, 0, 1000);
    std::vector<Segment> edges{Segment({300, 0}, {300, 1000})};

    CvtConfig cfg;
    cfg.alpha = 0.1;
    cfg.beta_density = 0.9;
    cfg.seed = 21;
    GeneratorSet gens{{}, {{500, 500}}};
    CvtResult weighted = run_cvt(gens, edges, dom, cfg);

    CvtConfig uniform_cfg = cfg;
    uniform_cfg.beta_density = 0.0;
    CvtResult uniform = run_cvt(gens, {}, dom, uniform_cfg);

    const Point2 w = weighted.generators.adaptive[0];
    const Point2 u = uniform.generators.adaptive[0];
    CHECK(min_distance_to_edge_set(w, edges) > min_distance_to_edge_set(u, edges) + 50.0);

    // with one generator the converged point is the whole-domain weighted
    // centroid; estimate it with ten times the samples
    Rng rng(808);
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const Point2 p{rng.uniform(0, 1000), rng.uniform(0, 1000)};
        const double rho = density(p, edges, cfg.alpha, cfg.beta_density);
        sw += rho;
        swx += rho * p.x;
        swy += rho * p.y;
    }
    CHECK(w.x == Approx(swx / sw).margin(15.0));
    CHECK(w.y == Approx(swy / sw).margin(15.0));
}

TEST_CASE("zero slope ignores the edge set bit for bit") {
    RectDomain dom(0, 1000, 0, 1000);
    CvtConfig cfg;
    cfg.beta_density = 0.0;
    cfg.seed = 404;
    GeneratorSet gens{{{600, 600}}, {{200, 300}, {800, 100}, {400, 700}}};
    std::vector<Segment> edges{Segment({0, 0}, {1000, 1000}), Segment({0, 1000}, {1000, 0})};
    CvtResult with_edges = run_cvt(gens, edges, dom, cfg);
    CvtResult without = run_cvt(gens, {}, dom, cfg);
    REQUIRE(with_edges.generators.adaptive.size() == without.generators.adaptive.size());
    for (std::size_t i = 0; i < without.generators.adaptive.size(); ++i) {
        CHECK(with_edges.generators.adaptive[i].x == without.generators.adaptive[i].x);
        CHECK(with_edges.generators.adaptive[i].y == without.generators.adaptive[i].y);
    }
}

TEST_CASE("lloyd updates never increase the energy on a fixed sample set") {
    Rng rng(62);
    RectDomain dom(0, 1000, 0, 1000);
    std::vector<Segment> edges{Segment({100, 100}, {900, 200})};
    for (int rep = 0; rep < 10; ++rep) {
        GeneratorSet gens;
        for (int i = 0; i < 2; ++i)
            gens.fixed.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000)});
        for (int i = 0; i < 4; ++i)
            gens.adaptive.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000)});
        std::vector<Point2> samples;
        for (int i = 0; i < 2000; ++i)
            samples.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000)});

        double prev = cvt_energy(gens, samples, edges, 0.1, 0.9);
        for (int step = 0; step < 5; ++step) {
            gens.adaptive = lloyd_step(gens, samples, edges, 0.1, 0.9);
            const double cur = cvt_energy(gens, samples, edges, 0.1, 0.9);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("cvt run is deterministic and in-domain") {
    RectDomain dom(0, 1000, 0, 1000);
    CvtConfig cfg;
    cfg.seed = 77;
    std::vector<Segment> edges{Segment({500, 0}, {500, 1000})};
    GeneratorSet gens{{{111, 222}}, {{300, 300}, {700, 700}}};
    CvtResult a = run_cvt(gens, edges, dom, cfg);
    CvtResult b = run_cvt(gens, edges, dom, cfg);
    REQUIRE(a.generators.adaptive.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.generators.adaptive[i].x == b.generators.adaptive[i].x);
        CHECK(a.generators.adaptive[i].y == b.generators.adaptive[i].y);
        CHECK(dom.contains(a.generators.adaptive[i]));
    }
}

TEST_CASE("cvt configuration guard rails") {
    RectDomain dom(0, 1000, 0, 1000);
    GeneratorSet gens{{}, {{500, 500}}};
    CvtConfig cfg;
    CHECK_THROWS_AS(run_cvt({{}, {}}, {}, dom, cfg), std::invalid_argument);
    cfg.beta_density = 0.9;
    CHECK_THROWS_AS(run_cvt(gens, {}, dom, cfg), std::invalid_argument);
    cfg.beta_density = 0.0;
    cfg.n_samples = 5;
    CHECK_THROWS_AS(run_cvt(gens, {}, dom, cfg), std::invalid_argument);
}

TEST_CASE("initial pseudo-node placement") {
    RectDomain dom(0, 1000, 0, 1000);
    std::vector<Point2> known{{500, 500}};

    SECTION("seeded and reproducible") {
        auto a = place_initial_pseudo_nodes(known, dom, 3, 15);
        auto b = place_initial_pseudo_nodes(known, dom, 3, 15);
        REQUIRE(a.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].y == b[i].y);
            CHECK(dom.contains(a[i]));
        }
        CHECK(distance(a[0], a[1]) > 0.0);
        CHECK(distance(a[1], a[2]) > 0.0);
    }
    SECTION("collisions are resampled away from known nodes") {
        RectDomain tiny(0, 3, 0, 3);
        std::vector<Point2> crowded{{1.5, 1.5}};
        for (int seed = 0; seed < 20; ++seed) {
            auto pts = place_initial_pseudo_nodes(crowded, tiny, 2, seed);
            for (const auto& p : pts) CHECK(distance(p, crowded[0]) >= 1.0);
        }
    }
    SECTION("saturated domain stalls with an error") {
        RectDomain dot(0, 0.5, 0, 0.5);
        std::vector<Point2> blocker{{0.25, 0.25}};
        CHECK_THROWS_AS(place_initial_pseudo_nodes(blocker, dot, 1, 3), std::runtime_error);
    }
}
