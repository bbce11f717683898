// nsk — 2D approximate-harmonic-map analysis toolkit.
//
// Subcommands: norms, flow, analyze, hopf, gauge, make-fixtures.
// Exit codes: 0 ok, 2 usage, 3 I/O, 4 stability, 10 gauge, 11 hopf,
// 12 bubble analysis.  NSK_THREADS caps OpenMP parallelism.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "nsk/bubble.hpp"
#include "nsk/config.hpp"
#include "nsk/errors.hpp"
#include "nsk/field.hpp"
#include "nsk/field_io.hpp"
#include "nsk/flow.hpp"
#include "nsk/gauge.hpp"
#include "nsk/hopf.hpp"
#include "nsk/norms.hpp"
#include "nsk/parallel.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace nsk;

namespace {

// Wall-clock probe for one manifest stage.
class Stage {
  public:
    Stage(RunManifest& m, std::string name)
        : m_(m), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
    ~Stage() {
        const auto dt = std::chrono::steady_clock::now() - t0_;
        m_.stage_seconds.emplace_back(
            name_, std::chrono::duration<double>(dt).count());
    }

  private:
    RunManifest& m_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

std::vector<double> parse_numbers(const std::string& spec, size_t want,
                                  const std::string& what) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= spec.size()) {
        size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        const std::string tok = spec.substr(pos, comma - pos);
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError(what + ": expected comma-separated numbers, got '" + spec +
                             "'");
        }
        pos = comma + 1;
        if (comma == spec.size()) break;
    }
    if (out.size() != want)
        throw UsageError(what + ": expected " + std::to_string(want) + " numbers");
    return out;
}

// all | disk:cx,cy,r | annulus:cx,cy,rin,rout
Region parse_region(const std::string& s) {
    if (s == "all") return Region::all();
    if (s.rfind("disk:", 0) == 0) {
        const std::vector<double> v = parse_numbers(s.substr(5), 3, "--region disk");
        return Region::disk({v[0], v[1]}, v[2]);
    }
    if (s.rfind("annulus:", 0) == 0) {
        const std::vector<double> v = parse_numbers(s.substr(8), 4, "--region annulus");
        return Region::annulus({v[0], v[1]}, v[2], v[3]);
    }
    throw UsageError("--region: expected all, disk:cx,cy,r, or annulus:cx,cy,rin,rout");
}

void make_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
}

ManifoldMap map_from_file(const std::string& path) {
    GridField f = read_field(path);
    if (f.kind() != FieldKind::Vector || f.ncomp() != 3)
        throw UsageError(path + ": expected a Vector(3) sphere map field");
    return project_to_sphere(f, 0.1);
}

// ---- norms ------------------------------------------------------------------

struct NormRequest {
    std::string name;
    int which = 0;  // 0 l2, 1 l21, 2 l2inf, 3 llogl, 4 morrey, 5 weakmorrey
    double p = 1.0, delta = 1.0;
};

NormRequest parse_norm_name(const std::string& s) {
    NormRequest r;
    r.name = s;
    if (s == "l2") r.which = 0;
    else if (s == "l21") r.which = 1;
    else if (s == "l2inf") r.which = 2;
    else if (s == "llogl") r.which = 3;
    else if (s.rfind("morrey:", 0) == 0 || s.rfind("weakmorrey:", 0) == 0) {
        const bool weak = s[0] == 'w';
        r.which = weak ? 5 : 4;
        // morrey:p:delta uses ':' separators to match the norm-name grammar.
        std::string args = s.substr(weak ? 11 : 7);
        for (char& c : args)
            if (c == ':') c = ',';
        const std::vector<double> v = parse_numbers(args, 2, "norm " + s);
        r.p = v[0];
        r.delta = v[1];
        if (!(r.p >= 1.0)) throw UsageError("norm " + s + ": p must be >= 1");
    } else
        throw UsageError("unknown norm '" + s +
                         "'; valid: l2, l21, l2inf, llogl, morrey:p:delta, "
                         "weakmorrey:p:delta");
    return r;
}

int cmd_norms(const std::string& file, const std::vector<std::string>& names,
              const std::string& region_spec, const std::string& out) {
    const GridField f = read_field(file);
    const Region region = parse_region(region_spec);
    ordered_json j;
    j["file"] = file;
    j["region"] = region_spec;
    ordered_json values = ordered_json::array();
    for (const std::string& name : names) {
        const NormRequest r = parse_norm_name(name);
        ordered_json row;
        row["norm"] = r.name;
        switch (r.which) {
            case 0: row["value"] = l2_norm(f, region); break;
            case 1: row["value"] = lorentz21_norm(f, region); break;
            case 2: row["value"] = lorentz2inf_norm(f, region); break;
            case 3: row["value"] = llogl_norm(f, region); break;
            case 4:
            case 5: {
                const double g = r.which == 4 ? morrey_norm(f, r.p, r.delta, region)
                                              : weak_morrey_norm(f, r.p, r.delta, region);
                row["value"] = std::pow(g, 1.0 / r.p);
                row["growth"] = g;  // sup of the growth quantity before the p-th root
                break;
            }
        }
        values.push_back(std::move(row));
    }
    j["values"] = std::move(values);
    const std::string text = j.dump(2);
    std::printf("%s\n", text.c_str());
    if (!out.empty()) write_text_file(out, text + "\n");
    return 0;
}

// ---- flow --------------------------------------------------------------------

int cmd_flow(const std::string& config_path, const std::string& out, uint64_t seed_flag,
             bool seed_set) {
    const ExperimentConfig cfg = load_config(config_path);
    if (!cfg.has_flow) throw UsageError("flow: config has no [flow] section");
    make_out_dir(out);

    RunManifest man;
    man.version = version_string();
    man.command = "flow";
    man.config_hash = fnv1a64(cfg.text);
    man.seed = seed_set ? seed_flag : cfg.seed;

    FlowResult res;
    {
        Stage st(man, "flow");
        ManifoldMap u0 = [&] {
            if (!cfg.flow.input.empty()) return map_from_file(cfg.flow.input);
            GridSpec g;
            g.origin = {-cfg.flow.half_width, -cfg.flow.half_width};
            g.width = 2.0 * cfg.flow.half_width;
            g.height = 2.0 * cfg.flow.half_width;
            g.nx = cfg.flow.nx;
            g.ny = cfg.flow.nx;
            g.validate();
            SequenceSpec s;
            s.base = cfg.flow.base;
            return s.make_base(g);
        }();
        if (cfg.flow.dump_every <= 0) {
            res = heat_flow(u0, cfg.flow.steps, cfg.flow.dt_factor, cfg.flow.stride,
                            cfg.flow.bc, cfg.flow.morrey_delta);
        } else {
            // Numbered snapshots: run the flow in chunks of dump_every
            // records each. The Dirichlet ring is invariant under the flow,
            // so chunked restarts reproduce the single-run evolution exactly.
            const int chunk = cfg.flow.dump_every * cfg.flow.stride;
            ManifoldMap u = u0;
            int done = 0;
            bool first = true;
            while (done < cfg.flow.steps) {
                const int span = std::min(chunk, cfg.flow.steps - done);
                FlowResult part = heat_flow(u, span, cfg.flow.dt_factor, cfg.flow.stride,
                                            cfg.flow.bc, cfg.flow.morrey_delta);
                for (FlowRecord rec : part.trajectory) {
                    if (!first && rec.step == 0) continue;  // duplicate of last record
                    rec.step += done;
                    rec.time = rec.step * part.dt;
                    res.trajectory.push_back(rec);
                }
                first = false;
                done += span;
                u = std::move(part.u);
                res.dt = part.dt;
                char name[48];
                std::snprintf(name, sizeof name, "u_%06d.nsk", done);
                write_nsk1(out + "/" + name, u.field());
                man.add_file(out, name);
            }
            res.u = std::move(u);
            res.steps = done;
        }
    }
    {
        Stage st(man, "emit");
        write_text_file(out + "/trajectory.csv", trajectory_csv(res));
        man.add_file(out, "trajectory.csv");
        write_nsk1(out + "/final.nsk", res.u.field());
        man.add_file(out, "final.nsk");
    }
    std::string mj = man.to_json();
    write_text_file(out + "/manifest.json", mj + "\n");
    std::printf("flow: %d steps, dt %.6g, final energy %.12g\n", res.steps, res.dt,
                res.trajectory.empty() ? 0.0 : res.trajectory.back().energy);
    std::printf("wrote %s/trajectory.csv, final.nsk, manifest.json\n", out.c_str());
    return 0;
}

// ---- analyze -----------------------------------------------------------------

std::string verdict_line(const char* label, bool pass, double value, double threshold,
                         const char* unit) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s identity: %s(%.4g %s %.4g %s)", label,
                  pass ? "PASS" : "FAIL", value, pass ? "<=" : ">", threshold, unit);
    return buf;
}

int cmd_analyze(const std::string& config_path, const std::string& out, bool emit_laurent,
                bool dump_gauge_flag, uint64_t seed_flag, bool seed_set) {
    const ExperimentConfig cfg = load_config(config_path);
    if (!cfg.has_sequence) throw UsageError("analyze: config has no [sequence] section");
    if (cfg.sequence.bubbles.empty())
        throw UsageError("analyze: sequence has no [bubble] sections (empty sequence)");
    make_out_dir(out);

    RunManifest man;
    man.version = version_string();
    man.command = "analyze";
    man.config_hash = fnv1a64(cfg.text);
    man.seed = seed_set ? seed_flag : cfg.seed;

    SequenceAnalysis a;
    {
        Stage st(man, "analyze");
        a = analyze_sequence(cfg.sequence, cfg.analysis);
    }

    {
        Stage st(man, "emit");
        write_text_file(out + "/decomposition.json", decomposition_json(a) + "\n");
        man.add_file(out, "decomposition.json");
        write_text_file(out + "/neck_ledger.csv", neck_ledger_csv(a.ledger));
        man.add_file(out, "neck_ledger.csv");
        write_text_file(out + "/residuals.csv", residuals_csv(a.residuals));
        man.add_file(out, "residuals.csv");

        // Plot data, two columns each.
        std::string plot = "x,y\n";
        char line[128];
        for (const IdentityRow& r : a.residuals) {
            std::snprintf(line, sizeof line, "%d,%.17g\n", r.n, r.residual_e);
            plot += line;
        }
        write_text_file(out + "/plot_residual_energy.csv", plot);
        man.add_file(out, "plot_residual_energy.csv");

        std::string p2 = "x,y\n", p21 = "x,y\n";
        for (const NeckLedgerRow& r : a.ledger) {
            if (r.n != a.spec.last || r.kind != "body" || r.i != 0 ||
                r.rep.annulus_empty)
                continue;
            std::snprintf(line, sizeof line, "%.17g,%.17g\n", r.rep.lambda,
                          r.rep.l2_energy);
            p2 += line;
            std::snprintf(line, sizeof line, "%.17g,%.17g\n", r.rep.lambda,
                          r.rep.l21_norm);
            p21 += line;
        }
        write_text_file(out + "/plot_neck_l2.csv", p2);
        man.add_file(out, "plot_neck_l2.csv");
        write_text_file(out + "/plot_neck_l21.csv", p21);
        man.add_file(out, "plot_neck_l21.csv");

        if (!a.blowups.empty()) {
            const std::vector<std::pair<double, double>> prof =
                concentration_profile(a.blowups.front().v, 20);
            std::string pc = "x,y\n";
            for (const auto& [r, e] : prof) {
                std::snprintf(line, sizeof line, "%.17g,%.17g\n", r, e);
                pc += line;
            }
            write_text_file(out + "/plot_concentration.csv", pc);
            man.add_file(out, "plot_concentration.csv");
        }
    }

    if (emit_laurent || dump_gauge_flag) {
        Stage st(man, "extras");
        const GluedMember fin = sequence_member(cfg.sequence, cfg.sequence.last);
        const AnnulusSpec A = body_annulus(fin, cfg.analysis, 0);
        if (emit_laurent) {
            const GridField H = hopf_differential(fin.u);
            const LaurentSeries ls = laurent_coefficients(
                H, A.center, std::sqrt(A.r_in * A.r_out), -8, 24);
            std::string csv = "n,re,im,abs\n";
            char line[160];
            for (int n = ls.n_min; n <= ls.n_max; ++n) {
                const cplx c = ls.coeff(n);
                std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", n, c.real(),
                              c.imag(), std::abs(c));
                csv += line;
            }
            write_text_file(out + "/laurent.csv", csv);
            man.add_file(out, "laurent.csv");
        }
        if (dump_gauge_flag) {
            const GaugeData gd = annulus_gauge(fin, A, cfg.analysis);
            make_out_dir(out + "/gauge");
            dump_gauge(gd, out + "/gauge");
            for (const char* f :
                 {"e1.nsk", "e2.nsk", "theta.nsk", "omega.nsk", "G.nsk", "T.nsk",
                  "B.nsk", "G1.nsk", "G2.nsk", "gauge.json"})
                man.add_file(out, std::string("gauge/") + f);
        }
    }

    std::string mj = man.to_json();
    write_text_file(out + "/manifest.json", mj + "\n");

    // Summary table; every number is also in residuals.csv / decomposition.json.
    std::printf("sequence %s (%s), members %d..%d\n", a.spec.name.c_str(),
                a.spec.kind.c_str(), a.spec.first, a.spec.last);
    std::printf("%4s %14s %14s %14s %14s\n", "n", "residual_E", "residual_21",
                "residual_osc", "residual_hess");
    for (const IdentityRow& r : a.residuals)
        std::printf("%4d %14.6g %14.6g %14.6g %14.6g\n", r.n, r.residual_e,
                    r.residual_21, r.residual_osc, r.residual_hess);
    std::printf("neck decay slopes (final member, body 0): L2 %.4g, L21 %.4g\n",
                a.neck_l2_slope, a.neck_l21_slope);
    std::printf("identity expected: %s\n", a.identity_expected ? "yes" : "no");
    const IdentityRow& fin = a.residuals.back();
    std::printf("%s\n", verdict_line("energy", a.energy_identity_pass,
                                     std::abs(fin.residual_e), 0.10 * fin.window_energy,
                                     "= 10% of bubble windows")
                            .c_str());
    std::printf("%s\n", verdict_line("l21", a.l21_identity_pass, std::abs(fin.residual_21),
                                     0.25 * fin.window_l21, "= 25% of bubble windows")
                            .c_str());
    std::printf("%s\n", verdict_line("oscillation", a.osc_identity_pass, fin.residual_osc,
                                     0.2, "absolute")
                            .c_str());
    std::printf("%s\n", verdict_line("hessian", a.hess_identity_pass,
                                     std::abs(fin.residual_hess), 0.25 * fin.window_hess,
                                     "= 25% of bubble windows")
                            .c_str());
    return 0;
}

// ---- hopf ----------------------------------------------------------------------

int cmd_hopf(const std::string& file, std::string center_spec, double radius,
             int n_min, int n_max, bool emit_laurent, const std::string& out) {
    const ManifoldMap u = map_from_file(file);
    const GridSpec& g = u.spec();
    Point center{g.origin.x + 0.5 * g.width, g.origin.y + 0.5 * g.height};
    if (!center_spec.empty()) {
        const std::vector<double> v = parse_numbers(center_spec, 2, "--center");
        center = {v[0], v[1]};
    }
    if (radius <= 0.0) radius = 0.25 * std::min(g.width, g.height);
    if (n_min > n_max) throw UsageError("--n-min must be <= --n-max");

    const GridField H = hopf_differential(u);
    GridField e = energy_density(u);
    const double grad2 = integrate_cells(g, Region::all(), [&](int i, int j, Point) {
        return e.at(i, j, 0);
    });
    const double h_l1 = integrate_cells(g, Region::all(), [&](int i, int j, Point) {
        return H.magnitude(i, j);
    });
    const HolomorphicFit fit = holomorphic_approx(H, center, radius);
    const LaurentSeries ls = laurent_coefficients(H, center, radius, n_min, n_max);

    ordered_json j;
    j["file"] = file;
    j["grid"] = {{"nx", g.nx}, {"ny", g.ny}};
    j["energy"] = grad2;
    j["hopf_l1"] = h_l1;
    j["hopf_l1_over_energy"] = grad2 > 0.0 ? h_l1 / grad2 : 0.0;
    j["holomorphic_fit"] = {{"center", {center.x, center.y}},
                            {"radius", radius},
                            {"degree", fit.degree},
                            {"residual_l1", fit.residual_l1}};
    ordered_json coeffs = ordered_json::array();
    for (int n = ls.n_min; n <= ls.n_max; ++n) {
        const cplx c = ls.coeff(n);
        coeffs.push_back({{"n", n}, {"re", c.real()}, {"im", c.imag()}});
    }
    j["laurent"] = {{"center", {center.x, center.y}},
                    {"radius", radius},
                    {"samples", ls.samples},
                    {"coeffs", std::move(coeffs)}};
    const std::string text = j.dump(2);
    std::printf("%s\n", text.c_str());
    if (!out.empty()) {
        make_out_dir(out);
        write_text_file(out + "/hopf.json", text + "\n");
        if (emit_laurent) {
            std::string csv = "n,re,im,abs\n";
            char line[160];
            for (int n = ls.n_min; n <= ls.n_max; ++n) {
                const cplx c = ls.coeff(n);
                std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", n, c.real(),
                              c.imag(), std::abs(c));
                csv += line;
            }
            write_text_file(out + "/laurent.csv", csv);
        }
    }
    return 0;
}

// ---- gauge ----------------------------------------------------------------------

int cmd_gauge(const std::string& file, const std::string& tau_file,
              const std::string& out) {
    const ManifoldMap u = map_from_file(file);
    GridField tau;
    const GridField* tau_ptr = nullptr;
    if (!tau_file.empty()) {
        tau = read_field(tau_file);
        tau_ptr = &tau;
    }
    const GaugeData gd = dbar_decompose(u, tau_ptr);
    make_out_dir(out);
    const std::string js = dump_gauge(gd, out);
    RunManifest man;
    man.version = version_string();
    man.command = "gauge";
    man.config_hash = fnv1a64(file);
    for (const char* f : {"e1.nsk", "e2.nsk", "theta.nsk", "omega.nsk", "G.nsk", "T.nsk",
                          "B.nsk", "G1.nsk", "G2.nsk", "gauge.json"})
        man.add_file(out, f);
    write_text_file(out + "/manifest.json", man.to_json() + "\n");
    std::printf("%s\n", js.c_str());
    return 0;
}

// ---- make-fixtures ----------------------------------------------------------------

GridSpec square_grid(int nx, double half_width) {
    GridSpec g;
    g.origin = {-half_width, -half_width};
    g.width = 2.0 * half_width;
    g.height = 2.0 * half_width;
    g.nx = nx;
    g.ny = nx;
    g.validate();
    return g;
}

int cmd_fixtures(const std::string& out, int nx, uint64_t seed) {
    make_out_dir(out);
    RunManifest man;
    man.version = version_string();
    man.command = "make-fixtures";
    man.config_hash = fnv1a64(std::to_string(nx));
    man.seed = seed;
    Stage st(man, "emit");

    // Indicator of the unit disk on [-2,2]^2.
    {
        const GridSpec g = square_grid(nx, 2.0);
        GridField f = GridField::scalar(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Point p = g.cell_center(i, j);
                f.at(i, j, 0) = std::hypot(p.x, p.y) <= 1.0 ? 1.0 : 0.0;
            }
        write_nsk1(out + "/chi_b1.nsk", f);
        man.add_file(out, "chi_b1.nsk");
    }
    // 1/|z| on [-1,1]^2 (cell centers avoid the origin).
    {
        const GridSpec g = square_grid(nx, 1.0);
        GridField f = GridField::scalar(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Point p = g.cell_center(i, j);
                f.at(i, j, 0) = 1.0 / std::hypot(p.x, p.y);
            }
        write_nsk1(out + "/inv_abs.nsk", f);
        man.add_file(out, "inv_abs.nsk");
    }
    // Smooth bump supported in the unit disk.
    {
        const GridSpec g = square_grid(nx, 2.0);
        GridField f = GridField::scalar(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Point p = g.cell_center(i, j);
                const double r2 = p.x * p.x + p.y * p.y;
                f.at(i, j, 0) = r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
            }
        write_nsk1(out + "/bump.nsk", f);
        man.add_file(out, "bump.nsk");
    }
    // Degree-1 and degree-2 rational bubbles on [-2,2]^2.
    {
        const GridSpec g = square_grid(nx, 2.0);
        BubbleSpec b;
        b.P.c = {cplx(0.0, 0.0), cplx(1.0, 0.0)};
        b.Q.c = {cplx(1.0, 0.0)};
        write_nsk1(out + "/bubble_deg1.nsk", rational_bubble(b, g).field());
        man.add_file(out, "bubble_deg1.nsk");
        BubbleSpec b2;
        b2.P.c = {cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)};
        b2.Q.c = {cplx(1.0, 0.0)};
        write_nsk1(out + "/bubble_deg2.nsk", rational_bubble(b2, g).field());
        man.add_file(out, "bubble_deg2.nsk");
    }
    // Low-energy geodesic sweep.
    {
        const GridSpec g = square_grid(nx, 1.0);
        write_nsk1(out + "/geodesic.nsk", geodesic_map(g, 0.8).field());
        man.add_file(out, "geodesic.nsk");
    }
    // Synthetic Laurent sample g = 1/z + 0.3 z^2 on [-2,2]^2.
    {
        const GridSpec g = square_grid(nx, 2.0);
        GridField f = GridField::complex_scalar(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Point p = g.cell_center(i, j);
                const cplx z(p.x, p.y);
                f.cset(i, j, 0, 1.0 / z + 0.3 * z * z);
            }
        write_nsk1(out + "/laurent_g.nsk", f);
        man.add_file(out, "laurent_g.nsk");
    }
    write_text_file(out + "/manifest.json", man.to_json() + "\n");
    std::printf("wrote %zu fixtures into %s\n", man.files.size(), out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"nsk — 2D approximate-harmonic-map analysis toolkit"};
    app.require_subcommand(1);

    // norms
    auto* c_norms = app.add_subcommand("norms", "Exotic norms of a field file");
    std::string norms_file, norms_region = "all", norms_out;
    std::vector<std::string> norms_names;
    c_norms->add_option("file", norms_file, "field file (.nsk or .csv)")->required();
    c_norms->add_option("norm", norms_names,
                        "norm names: l2 l21 l2inf llogl morrey:p:delta weakmorrey:p:delta")
        ->required();
    c_norms->add_option("--region", norms_region,
                        "all | disk:cx,cy,r | annulus:cx,cy,rin,rout");
    c_norms->add_option("--out", norms_out, "also write the JSON report here");

    // flow
    auto* c_flow = app.add_subcommand("flow", "Harmonic map heat flow");
    std::string flow_config, flow_out = "flow-out";
    uint64_t flow_seed = 0;
    c_flow->add_option("--config", flow_config, "INI config with a [flow] section")
        ->required();
    c_flow->add_option("--out", flow_out, "output directory");
    auto* flow_seed_opt = c_flow->add_option("--seed", flow_seed, "recorded RNG seed");

    // analyze
    auto* c_an = app.add_subcommand("analyze", "Bubbling analysis of a sequence");
    std::string an_config, an_out = "analyze-out";
    uint64_t an_seed = 0;
    bool an_laurent = false, an_gauge = false;
    c_an->add_option("--config", an_config, "INI config with a [sequence] section")
        ->required();
    c_an->add_option("--out", an_out, "output directory");
    auto* an_seed_opt = c_an->add_option("--seed", an_seed, "recorded RNG seed");
    c_an->add_flag("--emit-laurent", an_laurent,
                   "write laurent.csv of the final member's Hopf differential");
    c_an->add_flag("--dump-gauge", an_gauge,
                   "dump the final member's body-annulus gauge data");

    // hopf
    auto* c_hopf = app.add_subcommand("hopf", "Hopf differential / Laurent report");
    std::string hopf_file, hopf_center, hopf_out;
    double hopf_radius = -1.0;
    int hopf_nmin = -4, hopf_nmax = 8;
    bool hopf_laurent = false;
    c_hopf->add_option("file", hopf_file, "sphere map field file")->required();
    c_hopf->add_option("--center", hopf_center, "contour center cx,cy");
    c_hopf->add_option("--radius", hopf_radius, "contour radius");
    c_hopf->add_option("--n-min", hopf_nmin, "lowest Laurent index");
    c_hopf->add_option("--n-max", hopf_nmax, "highest Laurent index");
    c_hopf->add_flag("--emit-laurent", hopf_laurent, "write laurent.csv (needs --out)");
    c_hopf->add_option("--out", hopf_out, "output directory");

    // gauge
    auto* c_gauge = app.add_subcommand("gauge", "Coulomb gauge decomposition dump");
    std::string gauge_file, gauge_tau, gauge_out = "gauge-out";
    c_gauge->add_option("file", gauge_file, "sphere map field file")->required();
    c_gauge->add_option("--tau", gauge_tau, "tension override field file");
    c_gauge->add_option("--out", gauge_out, "output directory");

    // make-fixtures
    auto* c_fix = app.add_subcommand("make-fixtures", "Emit the analytic test corpus");
    std::string fix_out = "fixtures";
    int fix_grid = 256;
    uint64_t fix_seed = 0;
    c_fix->add_option("--out", fix_out, "output directory");
    c_fix->add_option("--grid", fix_grid, "fixture grid resolution")
        ->check(CLI::Range(16, 4096));
    c_fix->add_option("--seed", fix_seed, "recorded RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    }

    try {
        if (app.got_subcommand(c_norms))
            return cmd_norms(norms_file, norms_names, norms_region, norms_out);
        if (app.got_subcommand(c_flow))
            return cmd_flow(flow_config, flow_out, flow_seed, flow_seed_opt->count() > 0);
        if (app.got_subcommand(c_an))
            return cmd_analyze(an_config, an_out, an_laurent, an_gauge, an_seed,
                               an_seed_opt->count() > 0);
        if (app.got_subcommand(c_hopf))
            return cmd_hopf(hopf_file, hopf_center, hopf_radius, hopf_nmin, hopf_nmax,
                            hopf_laurent, hopf_out);
        if (app.got_subcommand(c_gauge)) return cmd_gauge(gauge_file, gauge_tau, gauge_out);
        if (app.got_subcommand(c_fix)) return cmd_fixtures(fix_out, fix_grid, fix_seed);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const StabilityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const GaugeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 10;
    } catch (const HopfError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 11;
    } catch (const BubbleError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 12;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
