// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <kostant/hyperbolic2d.hpp>
#include <kostant/io.hpp>
#include <kostant/jets.hpp>
#include <kostant/kostant_nd.hpp>
#include <kostant/verify.hpp>

#include "support.hpp"

using namespace kostant;
using testing_support::random_scalar;
using testing_support::random_series;
using Q = gaussian_rational;
using SQ = truncated_series<Q>;
using F = separable_function<Q>;

namespace
{

// Failure notes for the criterion being evaluated.
struct tally {
    std::vector<std::string> notes;
    void fail(const std::string &s)
    {
        if (notes.size() < 5) {
            notes.push_back(s);
        }
    }
    [[nodiscard]] bool ok() const
    {
        return notes.empty();
    }
};

int failures = 0;

void criterion(int id, const std::string &title, const std::function<void(tally &)> &body)
{
    tally t;
    try {
        body(t);
    } catch (const std::exception &e) {
        t.fail(std::string("exception: ") + e.what());
    }
    std::cout << (t.ok() ? "PASS" : "FAIL") << " criterion " << id << ": " << title << '\n';
    for (const auto &n : t.notes) {
        std::cout << "    " << n << '\n';
    }
    if (!t.ok()) {
        ++failures;
    }
}

evaluable eval_of(const smooth_function_2d<Q> &g)
{
    return [g](std::span<const double> p) { return g.evaluate(p); };
}

evaluable eval_of(const F &f)
{
    return [f](std::span<const double> p) { return f.evaluate(p); };
}

template <typename C>
polarized_form<C> random_exact(int degree, int n, const C &proto,
                               const std::function<C(const index_tuple &)> &coeff)
{
    polarized_form<C> b(degree - 1, n, proto);
    for (const auto &t : increasing_tuples(n, degree - 1)) {
        b.set(t, coeff(t));
    }
    return apply_dnabla(b);
}

std::string read_text(const std::filesystem::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

const std::map<std::string, std::string> kind_subcommand{
    {"solve2d", "solve2d"},           {"solve_h1", "h1"},  {"solve_top", "top"},     {"solve_h2_dim6", "h2dim6"},
    {"flat_section", "flat-section"}, {"verify", "verify"}, {"expand_jets", "expand"},
};

} // namespace

int main()
{
    auto &g = testing_support::rng();
    const auto model1 = build_model({0, 1, 0});

    criterion(1, "recursion jets equal closed-form jets (200 random f, order 16)", [&](tally &t) {
        for (int trial = 0; trial < 200; ++trial) {
            const auto f = random_series<complex>(g, 1, 16, 16, 30, {1});
            const auto rep = compare_series(solve_jets_recursive(f), solve_jets_closed_form(f), 1e-12);
            if (!rep.within_tolerance()) {
                t.fail("trial " + std::to_string(trial) + ": relative gap " + std::to_string(*rep.symbolic_max));
            }
        }
    });

    criterion(2, "exact polynomial solve: zero symbolic residual, Taylor matches recursion", [&](tally &t) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto s = random_series<Q>(g, 1, 14, 8, 10, {1});
            const auto sol = solve_poly_exact(s);
            if (!(sol.closed().cohom(1) - F::from_series(s)).is_zero()) {
                t.fail("trial " + std::to_string(trial) + ": nonzero symbolic residual");
            }
            const auto rep = compare_series(sol.closed().taylor(12), solve_jets_recursive(s), 1e-10);
            if (!rep.within_tolerance()) {
                t.fail("trial " + std::to_string(trial) + ": Taylor gap " + std::to_string(*rep.symbolic_max));
            }
        }
    });

    criterion(3, "homotopy solution: flow residual, integral bound, decay near the axes", [&](tally &t) {
        std::uniform_int_distribution<int> deg(0, 3);
        const auto grid = grid_spec::standard(1);
        for (double c : {1.0, 2.0}) {
            for (int trial = 0; trial < 10; ++trial) {
                std::vector<Q> pre(static_cast<std::size_t>(deg(g) + 1));
                for (auto &a : pre) {
                    a = random_scalar<Q>(g);
                }
                const auto f = flat_factor<Q>{c, pre}.as_function(1, 1);
                const auto sol = solve_full_2d(f);
                const auto fe = eval_of(f);
                const auto rep = flow_residual(model1, 1, eval_of(sol), fe, grid, {}, 1e-6);
                if (!rep.within_tolerance()) {
                    t.fail("c=" + std::to_string(c) + ": flow residual " + std::to_string(*rep.grid_max));
                }
                for (const auto &p : grid.points()) {
                    const double v = std::abs(sol.evaluate(p));
                    if (v > homotopy_bound(fe, p) * (1.0 + 1e-12)) {
                        t.fail("bound violated at (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")");
                    }
                    if (std::abs(p[0] * p[1]) <= 0.05 && v > 1e-3) {
                        t.fail("|G| = " + std::to_string(v) + " with |h| <= 0.05");
                    }
                }
            }
        }
    });

    criterion(4, "quadrant kernels solve the kernel equation; zero kernel is zero", [&](tally &t) {
        std::uniform_real_distribution<double> cs(0.5, 3.0);
        std::bernoulli_distribution coin(0.6);
        std::uniform_int_distribution<int> deg(0, 2);
        const evaluable zero = [](std::span<const double>) { return complex{}; };
        auto grid = grid_spec::standard(1);
        grid.exclude_abs_h_below = 1e-2;
        for (int trial = 0; trial < 10; ++trial) {
            quadrant_kernel<Q> k;
            for (auto &a : k.a) {
                if (coin(g)) {
                    std::vector<Q> pre(static_cast<std::size_t>(deg(g) + 1));
                    for (auto &c : pre) {
                        c = random_scalar<Q>(g);
                    }
                    a = flat_factor<Q>{cs(g), pre};
                }
            }
            const auto sec = flat_section_build(k);
            if (!sec.closed().cohom(1).is_zero()) {
                t.fail("trial " + std::to_string(trial) + ": symbolic kernel residual is nonzero");
            }
            const auto rep = flow_residual(model1, 1, eval_of(sec), zero, grid, {}, 1e-8);
            if (!rep.within_tolerance()) {
                t.fail("trial " + std::to_string(trial) + ": grid residual " + std::to_string(*rep.grid_max));
            }
        }
        const auto z = flat_section_build(quadrant_kernel<Q>{});
        for (const auto &p : grid_spec::standard(1).points()) {
            if (z.evaluate(p) != complex{}) {
                t.fail("zero kernel is not identically zero");
                break;
            }
        }
    });

    criterion(5, "first cohomology: exact roundtrip through order 10, transport, NOT_CLOSED", [&](tally &t) {
        for (int n = 2; n <= 3; ++n) {
            const int order = 10 + 2 * n;
            for (int trial = 0; trial < 50; ++trial) {
                const auto g0 = random_series<Q>(g, n, order, 5, 8);
                const auto alpha = random_exact<SQ>(1, n, SQ(n, order), [&](const index_tuple &) { return g0; });
                const auto res = solve_h1(alpha);
                if (res.solution != g0.truncated(10)) {
                    t.fail("n=" + std::to_string(n) + " trial " + std::to_string(trial) + ": solution differs");
                }
                for (const auto &tr : res.transport) {
                    if (!tr.exact_zero) {
                        t.fail("n=" + std::to_string(n) + ": transport '" + tr.label + "' nonzero");
                    }
                }
            }
            auto bad = polarized_form<SQ>(1, n, SQ(n, order));
            multi_index y1(2 * static_cast<std::size_t>(n), 0);
            y1[1] = 1;
            bad.set({1}, SQ::monomial(n, order, y1, Q(1)));
            try {
                (void)solve_h1(bad);
                t.fail("n=" + std::to_string(n) + ": non-closed input accepted");
            } catch (const error &e) {
                if (e.code() != error_code::not_closed) {
                    t.fail("n=" + std::to_string(n) + ": wrong code " + std::string(to_string(e.code())));
                }
            }
        }
    });

    criterion(6, "top degree: d nabla of the solution returns the data", [&](tally &t) {
        for (int n = 2; n <= 3; ++n) {
            index_tuple all;
            for (int i = 1; i <= n; ++i) {
                all.push_back(i);
            }
            for (int trial = 0; trial < 50; ++trial) {
                auto a = polarized_form<SQ>(n, n, SQ(n, 10));
                a.set(all, random_series<Q>(g, n, 10, 6, 8, {1}));
                const auto res = solve_top(a);
                const auto back = apply_dnabla(res.solution);
                if (!(back - a.restricted(back.zero())).is_zero()) {
                    t.fail("n=" + std::to_string(n) + " trial " + std::to_string(trial) + ": mismatch");
                }
            }
        }
    });

    criterion(7, "second cohomology in dimension six: exact roundtrip through order 8", [&](tally &t) {
        for (int trial = 0; trial < 25; ++trial) {
            const auto alpha = random_exact<SQ>(2, 3, SQ(3, 14),
                                                [&](const index_tuple &i) { return random_series<Q>(g, 3, 14, 5, 6, i); });
            const auto res = solve_h2_dim6(alpha);
            const auto back = apply_dnabla(res.solution);
            if (back.zero().order() != 8 || !(back - alpha.restricted(back.zero())).is_zero()) {
                t.fail("trial " + std::to_string(trial) + ": mismatch");
            }
        }
    });

    criterion(8, "structural identities: d nabla squared, flow invariants, diagonal transport", [&](tally &t) {
        for (int n = 1; n <= 3; ++n) {
            for (int k = 0; k + 2 <= n; ++k) {
                for (int trial = 0; trial < 5; ++trial) {
                    auto b = polarized_form<SQ>(k, n, SQ(n, 10));
                    for (const auto &i : increasing_tuples(n, k)) {
                        b.set(i, random_series<Q>(g, n, 10, 8, 8, i));
                    }
                    if (!apply_dnabla(apply_dnabla(b)).is_zero()) {
                        t.fail("d nabla squared nonzero for n=" + std::to_string(n) + ", k=" + std::to_string(k));
                    }
                }
            }
        }
        std::uniform_real_distribution<double> mag(0.05, 1.0);
        std::uniform_real_distribution<double> ts(-2.0, 2.0);
        std::bernoulli_distribution coin(0.5);
        for (int s = 0; s < 1000; ++s) {
            const std::array<double, 2> p{(coin(g) ? 1 : -1) * mag(g), (coin(g) ? 1 : -1) * mag(g)};
            const double tt = ts(g);
            const auto q = model1.flow(1, tt, p);
            const double lg = model1.log_gamma(1, p);
            if (std::abs(model1.log_gamma(1, q) - (lg + tt)) > 1e-10) {
                t.fail("ln gamma is not shifted by the flow time");
            }
            if (std::abs(model1.hamiltonian(1, q) - model1.hamiltonian(1, p)) > 1e-10) {
                t.fail("h is not flow invariant");
            }
            const auto d = model1.flow(1, -lg, p);
            if (std::abs(std::abs(d[0]) - std::abs(d[1])) > 1e-10) {
                t.fail("transported point misses the diagonal");
            }
        }
    });

    criterion(9, "corpus runs to byte-stable reports with matching exit codes", [&](tally &t) {
        const std::filesystem::path dir{KOSTANT_PROBLEMS_DIR};
        const auto tmp = std::filesystem::temp_directory_path() / "kostant_acceptance";
        std::filesystem::create_directories(tmp);
        int seen = 0;
        std::vector<std::filesystem::path> files;
        for (const auto &e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".json") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto &path : files) {
            ++seen;
            const auto doc = io::json::parse(read_text(path));
            const auto sub = kind_subcommand.at(doc.at("kind").get<std::string>());
            std::string texts[2];
            int codes[2] = {0, 0};
            for (int run = 0; run < 2; ++run) {
                const auto out = tmp / (path.stem().string() + "." + std::to_string(run) + ".json");
                const std::string cmd = std::string("\"") + KOSTANT_LAB_PATH + "\" " + sub + " --in \"" + path.string()
                                        + "\" --out \"" + out.string() + "\" 2>/dev/null";
                const int rc = std::system(cmd.c_str());
                codes[run] = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
                auto rep = io::json::parse(read_text(out));
                rep.erase("timings");
                texts[run] = rep.dump(2);
                const bool ok = rep.at("status") == "ok";
                if (codes[run] != (ok ? 0 : 1)) {
                    t.fail(path.filename().string() + ": exit code " + std::to_string(codes[run]) + " vs status "
                           + rep.at("status").get<std::string>());
                }
            }
            if (texts[0] != texts[1]) {
                t.fail(path.filename().string() + ": reports differ between runs");
            }
        }
        std::filesystem::remove_all(tmp);
        if (seen == 0) {
            t.fail("no corpus documents found");
        }
    });

    return failures == 0 ? 0 : 1;
}
