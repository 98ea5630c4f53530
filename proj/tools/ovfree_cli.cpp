// Command-line front end: data ingestion, pipeline orchestration, and
// verification reports. Every subcommand is a thin wrapper over the library.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ovfree/json_io.hpp"
#include "ovfree/verify.hpp"

namespace {

using namespace ovfree;

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ovfree::parse_error("bad grid entry: '" + item + "'");
        }
    }
    if (out.empty()) throw ovfree::parse_error("empty grid");
    return out;
}

void emit(const std::string& out_path, const json& j) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(out_path, j);
    }
}

void emit_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
    }
}

int run_convolve(const std::string& kind, const std::string& a_path,
                 const std::string& b_path, const std::string& out_path) {
    json ja = load_json_file(a_path);
    json jb = load_json_file(b_path);
    json result;
    if (kind == "cfree") {
        DistPair x = pair_from_json(ja);
        DistPair y = pair_from_json(jb);
        result = pair_to_json(convolve_cfree(x, y));
    } else {
        OVDistribution x = distribution_from_json(ja);
        OVDistribution y = distribution_from_json(jb);
        ConvKind ck = (kind == "free") ? ConvKind::free : ConvKind::boolean;
        result = distribution_to_json(convolve(ck, x, y));
    }
    emit(out_path, result);
    return 0;
}

int run_bp(const std::string& path, const std::string& out_path) {
    json j = load_json_file(path);
    json result;
    if (j.contains("mu")) {
        result = pair_to_json(bp_map(pair_from_json(j)));
    } else {
        result = distribution_to_json(bp_map(distribution_from_json(j)));
    }
    emit(out_path, result);
    return 0;
}

std::string harness_csv(const HarnessReport& rep, int order) {
    std::ostringstream os;
    os << "n,k_n,order,boolean_distance,free_distance,bp_residual,cp_min_eigenvalue\n";
    for (const HarnessRow& row : rep.rows)
        for (int k = 1; k <= order; ++k)
            os << row.n << "," << row.k << "," << k << ","
               << format_number(row.boolean_distance[k - 1]) << ","
               << format_number(row.free_distance[k - 1]) << ","
               << format_number(rep.bp_residual) << "," << format_number(rep.cp_min_eig)
               << "\n";
    return os.str();
}

int run_limits(const std::string& family, int order, int n_max, double beta,
               const std::string& out_path) {
    ArraySpec spec;
    if (family == "clt_rademacher") {
        spec = array_clt_rademacher(order, n_max);
    } else if (family == "point_mass") {
        spec = array_point_mass(beta, order, n_max);
    } else {
        throw ovfree::parse_error("unknown array family: " + family);
    }
    HarnessReport rep = limit_harness(spec);
    emit_text(out_path, harness_csv(rep, order));
    return 0;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
    std::ostringstream os;
    os << "y,n_fold,iterations,fp_residual,min_eig_im_omega_gap,"
          "g_residual,g_bound,nfold_h_residual,nfold_h_bound,sum_h_residual,sum_h_bound,"
          "omega_sum_residual,omega_sum_bound,omega_sum_consistency,"
          "asym_residual,asym_bound,pass\n";
    for (const SuiteRow& r : rows) {
        os << format_number(r.y) << "," << r.n_fold << "," << r.iterations << ","
           << format_number(r.fp_residual) << "," << format_number(r.min_eig_im_omega_gap)
           << "," << format_number(r.g_residual) << "," << format_number(r.g_bound) << ","
           << format_number(r.nfold_h_residual) << "," << format_number(r.nfold_h_bound) << ","
           << format_number(r.sum_h_residual) << "," << format_number(r.sum_h_bound) << ","
           << format_number(r.omega_sum_residual) << "," << format_number(r.omega_sum_bound) << ","
           << format_number(r.omega_sum_consistency) << ","
           << format_number(r.asym_residual) << "," << format_number(r.asym_bound) << ","
           << (r.pass ? "PASS" : "FAIL") << "\n";
    }
    return os.str();
}

int run_subordinate(const std::string& model_path, const std::string& model2_path,
                    const std::string& grid_str, int n_fold, int order, double tol,
                    const std::string& out_path) {
    OperatorModel mx = model_from_json(load_json_file(model_path));
    OperatorModel my =
        model2_path.empty() ? mx : model_from_json(load_json_file(model2_path));
    std::mt19937_64 rng(7);
    mx.validate(rng);
    my.validate(rng);
    FixedPointConfig cfg;
    cfg.tol = tol;
    std::vector<SuiteRow> rows =
        verify_subordination_suite(mx, my, parse_grid(grid_str), n_fold, order, cfg);
    emit_text(out_path, suite_csv(rows));
    for (const SuiteRow& r : rows)
        if (!r.pass)
            throw convergence_error("subordination suite row failed its bound",
                                    r.fp_residual);
    return 0;
}

int run_scalar(const std::string& op, const std::string& a_path,
               const std::string& b_path, const std::string& out_path) {
    json ja = load_json_file(a_path);
    json result;
    if (op == "T") {
        ScalarDist d = scalar_dist_from_json(ja);
        ScalarSeries t = scalar_T(d);
        json coeffs = json::array();
        for (const cplx& c : t.c) coeffs.push_back({round_sig(c.real()), round_sig(c.imag())});
        result["kind"] = "T";
        result["order"] = t.order;
        result["coeffs"] = coeffs;
    } else if (op == "cT") {
        ScalarPair p = scalar_pair_from_json(ja);
        ScalarSeries t = scalar_cT(p);
        json coeffs = json::array();
        for (const cplx& c : t.c) coeffs.push_back({round_sig(c.real()), round_sig(c.imag())});
        result["kind"] = "cT";
        result["order"] = t.order;
        result["coeffs"] = coeffs;
    } else if (op == "multiply-free") {
        ScalarDist x = scalar_dist_from_json(ja);
        ScalarDist y = scalar_dist_from_json(load_json_file(b_path));
        result = scalar_dist_to_json(mult_convolve_free(x, y));
    } else if (op == "multiply-cfree") {
        ScalarPair x = scalar_pair_from_json(ja);
        ScalarPair y = scalar_pair_from_json(load_json_file(b_path));
        result = scalar_pair_to_json(mult_convolve_cfree(x, y));
    } else if (op == "bp") {
        if (ja.contains("mu")) {
            result = scalar_pair_to_json(scalar_bp(scalar_pair_from_json(ja)));
        } else {
            result = scalar_dist_to_json(scalar_bp(scalar_dist_from_json(ja)));
        }
    } else if (op == "bp-check") {
        ScalarPair x = scalar_pair_from_json(ja);
        ScalarPair y = scalar_pair_from_json(load_json_file(b_path));
        ScalarBPReport rep = verify_bp_homomorphism(x, y);
        result["shift_lemma_residual"] = round_sig(rep.shift_lemma_residual);
        result["hom_residual"] = round_sig(rep.hom_residual);
        result["t_shift_residual"] = round_sig(rep.t_shift_residual);
    } else {
        throw ovfree::parse_error("unknown scalar op: " + op);
    }
    emit(out_path, result);
    return 0;
}

int run_verify(const std::string& suite, int order, int dim, std::uint64_t seed,
               double tol, const std::string& out_path) {
    std::cout << "seed " << seed << "\n";
    std::vector<CriterionResult> rows;
    if (suite == "all" || suite == "acceptance") {
        std::vector<CriterionResult> acc = run_acceptance(seed);
        rows.insert(rows.end(), acc.begin(), acc.end());
    }
    if (suite == "all" || suite == "random") {
        std::vector<CriterionResult> sweep = run_random_sweep(seed, order, dim, tol);
        rows.insert(rows.end(), sweep.begin(), sweep.end());
    }
    if (rows.empty()) throw ovfree::parse_error("unknown suite: " + suite);
    bool all_pass = true;
    for (const CriterionResult& r : rows) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name
                  << "  value=" << format_number(r.value)
                  << "  threshold=" << format_number(r.threshold) << "\n";
        all_pass = all_pass && r.pass;
    }
    emit_text(out_path, results_to_csv(rows));
    return all_pass ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"operator-valued free/Boolean/c-free convolution engine"};
    app.require_subcommand(1);

    std::string kind = "free", a_path, b_path, out_path, family = "clt_rademacher";
    std::string model_path, model2_path, grid = "4,6,8", op = "T", suite = "all";
    std::string format = "";
    int order = 6, n_max = 256, n_fold = 2, dim = 1;
    double beta = 1.0, tol = 1e-8;
    std::uint64_t seed = 20260808;

    CLI::App* conv = app.add_subcommand("convolve", "additive convolution of two inputs");
    conv->add_option("--kind", kind, "free | boolean | cfree")
        ->check(CLI::IsMember({"free", "boolean", "cfree"}));
    conv->add_option("a", a_path, "first input JSON")->required();
    conv->add_option("b", b_path, "second input JSON")->required();
    conv->add_option("--out", out_path, "output path (stdout if omitted)");
    conv->add_option("--format", format, "output format (json)")
        ->check(CLI::IsMember({"json"}));

    CLI::App* bp = app.add_subcommand("bp", "Bercovici-Pata map of a distribution or pair");
    bp->add_option("input", a_path, "input JSON")->required();
    bp->add_option("--out", out_path, "output path");

    CLI::App* lim = app.add_subcommand("limits", "triangular-array limit harness (CSV)");
    lim->add_option("--family", family, "clt_rademacher | point_mass");
    lim->add_option("--order", order, "truncation order");
    lim->add_option("--n-max", n_max, "largest row size (powers of two)");
    lim->add_option("--beta", beta, "point-mass location");
    lim->add_option("--out", out_path, "output CSV path");
    lim->add_option("--format", format, "output format (csv)")
        ->check(CLI::IsMember({"csv"}));

    CLI::App* sub = app.add_subcommand("subordinate", "subordination identity suite (CSV)");
    sub->add_option("--model", model_path, "operator model JSON")->required();
    sub->add_option("--model2", model2_path, "second model JSON (defaults to the first)");
    sub->add_option("--grid", grid, "comma-separated y values for b = iy 1");
    sub->add_option("--n-fold", n_fold, "self-convolution fold count");
    sub->add_option("--order", order, "series truncation order");
    sub->add_option("--tol", tol, "fixed-point tolerance");
    sub->add_option("--out", out_path, "output CSV path");
    sub->add_option("--format", format, "output format (csv)")
        ->check(CLI::IsMember({"csv"}));

    CLI::App* sc = app.add_subcommand("scalar", "scalar multiplicative layer");
    sc->add_option("--op", op, "T | cT | multiply-free | multiply-cfree | bp | bp-check");
    sc->add_option("a", a_path, "input JSON")->required();
    sc->add_option("b", b_path, "second input JSON (for binary ops)");
    sc->add_option("--out", out_path, "output path");

    CLI::App* ver = app.add_subcommand("verify", "run the acceptance / invariant suite");
    ver->add_option("--suite", suite, "all | acceptance | random");
    ver->add_option("--order", order, "order for the random sweep");
    ver->add_option("--dim", dim, "dimension for the random sweep");
    ver->add_option("--seed", seed, "random seed (printed)");
    ver->add_option("--tol", tol, "threshold for the random sweep");
    ver->add_option("--out", out_path, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (conv->parsed()) return run_convolve(kind, a_path, b_path, out_path);
        if (bp->parsed()) return run_bp(a_path, out_path);
        if (lim->parsed()) return run_limits(family, order, n_max, beta, out_path);
        if (sub->parsed())
            return run_subordinate(model_path, model2_path, grid, n_fold, order, tol,
                                   out_path);
        if (sc->parsed()) return run_scalar(op, a_path, b_path, out_path);
        if (ver->parsed()) return run_verify(suite, order, dim, seed, tol, out_path);
    } catch (const ovfree::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ovfree::resource_error& e) {
        std::cerr << "resource guardrail: " << e.what() << "\n";
        return 4;
    } catch (const ovfree::convergence_error& e) {
        std::cerr << "numeric failure: " << e.what() << " (residual " << e.residual
                  << ")\n";
        return 3;
    } catch (const ovfree::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
