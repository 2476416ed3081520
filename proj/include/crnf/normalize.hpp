#ifndef CRNF_NORMALIZE_HPP
#define CRNF_NORMALIZE_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "linsolve.hpp"
#include "transform.hpp"

namespace crnf {

enum class Mode { partial, intrinsic, extrinsic, quasi };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::partial: return "partial";
        case Mode::intrinsic: return "intrinsic";
        case Mode::extrinsic: return "extrinsic";
        case Mode::quasi: return "quasi";
    }
    return "?";
}

/// Free parameters of the partial / quasi normal forms: the pure parts
/// f(z, 0, u) and g(0, 0, u), plus the real parameter r = g_{u^2}(0) for the
/// hypersurface-type full modes (a derivative value; the stored monomial
/// coefficient is r/2).
struct FreeParams {
    std::vector<Series> f0;  // n components, monomials in (z, u) only
    std::vector<Series> g0;  // d components, real, monomials in u only
    Rat r = Rat(0);

    static FreeParams zero(Dims dims) {
        FreeParams p;
        for (int j = 0; j < dims.n; ++j) p.f0.push_back(Series::zero(dims, kInfBound));
        for (int k = 0; k < dims.d; ++k) p.g0.push_back(Series::zero(dims, kInfBound));
        return p;
    }

    void validate(Dims dims) const {
        if (int(f0.size()) != dims.n || int(g0.size()) != dims.d)
            throw ShapeError("free parameter component count mismatch");
        for (const auto& s : f0)
            for (const auto& t : s.terms()) {
                if (mono_deg_zbar(dims, t.m) != 0)
                    throw PreconditionError("f0 must not depend on zbar");
                if (mono_order(dims, t.m) < 2)
                    throw PreconditionError("f0 must have no constant or linear terms");
            }
        for (const auto& s : g0) {
            if (!is_real(s)) throw PreconditionError("g0 must be real");
            for (const auto& t : s.terms()) {
                if (mono_deg_z(dims, t.m) != 0 || mono_deg_zbar(dims, t.m) != 0)
                    throw PreconditionError("g0 must depend on u only");
                if (mono_order(dims, t.m) < 2)
                    throw PreconditionError("g0 must have no constant or linear terms");
            }
        }
    }
};

struct ConditionResidual {
    std::string condition;
    int weight;
    bool zero;
};

struct NormalFormResult {
    Transform transform;
    AlmostCR structure_out;
    std::optional<std::vector<Series>> phi;  // extrinsic / quasi modes
    std::vector<ConditionResidual> residuals;
    int valid_weight = 0;
};

struct NormalizeError : std::runtime_error {
    enum class Code { levi_degenerate, not_strongly_nondegenerate };
    Code code;
    int weight;
    std::vector<CRat> kernel_witness;

    NormalizeError(Code c, int w, std::vector<CRat> witness, const std::string& msg)
        : std::runtime_error(msg), code(c), weight(w), kernel_witness(std::move(witness)) {}
};

struct NormalizeOptions {
    unsigned permute_seed = 0;        // shuffles unknown assembly order; output invariant
    bool superposition_check = true;  // affine superposition assertion at every step
};

namespace nf_detail {

// ------------------------------------------------------------------
// phi recovery: solve Ltw = i (id - i phi_u)^{-1} phi_z e for phi under the
// no-harmonic-term convention phi_{zbar^b u^c} = 0. Equivalent fixed point:
// E_z phi = -i Ltw - phi_u * Ltw (component-wise over the d rows).
inline std::vector<Series> recover_phi(const Dims& dims, const std::vector<Series>& ltw, int cap) {
    std::vector<Series> phi(dims.d, Series::zero(dims, cap));
    for (int iter = 0; iter <= cap + 2; ++iter) {
        std::vector<Series> next;
        next.reserve(dims.d);
        bool stable = true;
        for (int i = 0; i < dims.d; ++i) {
            Series rhs = ltw[i].truncated(cap).scaled(-crat_i());
            for (int j = 0; j < dims.d; ++j)
                rhs = rhs - mul(differentiate(phi[i], var_u(dims, j)).with_bound(cap), ltw[j], cap);
            std::vector<Term> terms;
            for (const auto& t : rhs.terms()) {
                int a = mono_deg_z(dims, t.m);
                if (a == 0) continue;  // harmonic parts stay zero
                terms.push_back({t.m, CRat(t.c.re / a, t.c.im / a)});
            }
            Series p = Series::from_terms(dims, cap, terms);
            if (p != phi[i]) stable = false;
            next.push_back(std::move(p));
        }
        phi = std::move(next);
        if (stable) break;
    }
    return phi;
}

// ------------------------------------------------------------------
// step unknowns

struct Unknown {
    int comp;      // f: 0..n-1, g: 0..d-1
    bool is_g;
    bool im_part;  // probe with i instead of 1
    Mono m;        // canonical monomial (pair representative for g)
};

inline bool grading_is_weight(Mode mode) {
    return mode == Mode::intrinsic || mode == Mode::extrinsic;
}

inline std::vector<Mono> step_monomials(const Dims& dims, Mode mode, int k, int wcap, bool for_f) {
    // weight grading: f carries the weight k-1 blocks, g the weight k blocks;
    // order grading: both carry order k blocks, capped at the valid weight
    std::vector<Mono> all = grading_is_weight(mode)
                                ? monomials_of_weight(dims, for_f ? k - 1 : k)
                                : monomials_of_order(dims, k, wcap);
    std::vector<Mono> out;
    for (Mono m : all)
        if (mono_order(dims, m) >= 2) out.push_back(m);
    return out;
}

inline std::vector<Unknown> step_unknowns(const Dims& dims, Mode mode, int k, int wcap,
                                          bool norm1_only) {
    std::vector<Unknown> u;
    for (int j = 0; j < dims.n; ++j)
        for (Mono m : step_monomials(dims, mode, k, wcap, true)) {
            if (norm1_only && !(mono_weight(dims, m) == 2 && mono_deg_zbar(dims, m) >= 1)) continue;
            u.push_back({j, false, false, m});
            u.push_back({j, false, true, m});
        }
    for (int i = 0; i < dims.d; ++i)
        for (Mono m : step_monomials(dims, mode, k, wcap, false)) {
            if (norm1_only && mono_weight(dims, m) != 2) continue;
            Mono mc = mono_conj(dims, m);
            if (mono_less(dims, mc, m)) continue;  // pair representative
            u.push_back({i, true, false, m});
            if (m != mc) u.push_back({i, true, true, m});
        }
    return u;
}

/// Transform with the given real coordinates in the unknown basis.
inline Transform delta_transform(const Dims& dims, const std::vector<Unknown>& unknowns,
                                 const std::vector<Rat>& x) {
    std::vector<std::vector<Term>> f(dims.n), g(dims.d);
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
        if (sgn(x[i]) == 0) continue;
        const Unknown& un = unknowns[i];
        CRat c = un.im_part ? CRat(Rat(0), x[i]) : CRat(x[i]);
        if (!un.is_g) {
            f[un.comp].push_back({un.m, c});
        } else {
            g[un.comp].push_back({un.m, c});
            Mono mc = mono_conj(dims, un.m);
            if (un.m != mc) g[un.comp].push_back({mc, c.conj()});
        }
    }
    std::vector<Series> fs, gs;
    for (int j = 0; j < dims.n; ++j) fs.push_back(Series::from_terms(dims, kInfBound, f[j]));
    for (int i = 0; i < dims.d; ++i) gs.push_back(Series::from_terms(dims, kInfBound, g[i]));
    return Transform::make(std::move(fs), std::move(gs));
}

// ------------------------------------------------------------------
// condition extraction

struct CondValue {
    const char* id;
    int weight;
    CRat value;
};

struct StepContext {
    Dims dims;
    Mode mode;
    int wcap;                   // valid weight = W - 2
    std::optional<TraceOp> tr;  // built from the Levi form, full modes only
    bool norm1_only = false;
};

inline void emit(std::vector<CondValue>& out, const char* id, int w, const CRat& v) {
    out.push_back({id, w, v});
}

inline bool low_zbar_block(int a, int b, int c) {
    return (a == 1 && b == 1 && c >= 1) || (a >= 2 && b == 1) || (a == 1 && b >= 2);
}

/// Stacked condition values of step k evaluated on a structure. These are
/// affine in the step-k unknowns of a transform applied to the structure.
inline std::vector<CondValue> step_conditions(const StepContext& ctx, const AlmostCR& s, int k) {
    const Dims& dims = ctx.dims;
    std::vector<CondValue> out;
    EulerRestriction er = euler_restrict(s);

    if (ctx.norm1_only) {
        for (int i = 0; i < dims.d; ++i)
            for (Mono m : monomials_of_weight(dims, 2)) {
                if (mono_deg_z(dims, m) == 0 && mono_deg_zbar(dims, m) == 0) continue;
                Mono mc = mono_conj(dims, m);
                if (mono_less(dims, mc, m)) continue;
                emit(out, "re_ltw", 2, er.w[i].coeff(m) + er.w[i].coeff(mc).conj());
            }
        for (int i = 0; i < dims.n; ++i)
            for (Mono m : monomials_of_weight(dims, 2))
                if (mono_deg_z(dims, m) >= 1) emit(out, "ltz_zero", 2, er.zbar[i].coeff(m));
        return out;
    }

    const bool weighted = grading_is_weight(ctx.mode);

    // L-tilde^zbar == 0 rows
    {
        std::vector<Mono> monos =
            weighted ? monomials_of_weight(dims, k - 1) : monomials_of_order(dims, k, ctx.wcap);
        for (int i = 0; i < dims.n; ++i)
            for (Mono m : monos)
                if (mono_deg_z(dims, m) >= 1)
                    emit(out, "ltz_zero", mono_weight(dims, m), er.zbar[i].coeff(m));
    }

    if (ctx.mode == Mode::partial) {
        for (int i = 0; i < dims.d; ++i)
            for (Mono m : monomials_of_order(dims, k, ctx.wcap)) {
                if (mono_deg_z(dims, m) == 0 && mono_deg_zbar(dims, m) == 0) continue;
                Mono mc = mono_conj(dims, m);
                if (mono_less(dims, mc, m)) continue;
                emit(out, "re_ltw", mono_weight(dims, m),
                     er.w[i].coeff(m) + er.w[i].coeff(mc).conj());
            }
        return out;
    }

    if (ctx.mode == Mode::intrinsic) {
        const Series& ltw = er.w[0];
        for (Mono m : monomials_of_weight(dims, k)) {
            int a = mono_deg_z(dims, m), b = mono_deg_zbar(dims, m);
            if (a == 0 && b == 0) continue;
            Mono mc = mono_conj(dims, m);
            if (!mono_less(dims, mc, m))
                emit(out, "re_ltw", k, ltw.coeff(m) + ltw.coeff(mc).conj());
            if (low_zbar_block(a, b, mono_deg_u(dims, m)))
                emit(out, "ltw_low_zbar", k, ltw.coeff(m));
        }
        if (ctx.tr) {
            Series wk = weight_component(ltw, k);
            for (auto [a, b, l, id] : {std::tuple{2, 2, 1, "tr_22"}, std::tuple{3, 2, 2, "tr2_32"},
                                       std::tuple{3, 3, 3, "tr3_33"}}) {
                if (a + b > k || (k - a - b) % 2 != 0) continue;
                Series img = ctx.tr->power(bigrade_component(wk, a, b).with_bound(kInfBound), l);
                Mono up = mono_set_exp(kMonoOne, var_u(dims, 0), (k - a - b) / 2);
                for (Mono tm : monomials_of_bidegree(dims, a - l, b - l))
                    emit(out, id, k, img.coeff(mono_mul(tm, up)));
            }
        }
        return out;
    }

    // extrinsic / quasi: conditions on the recovered embedding function
    std::vector<Series> phi = recover_phi(dims, er.w, ctx.wcap);
    std::vector<Mono> monos =
        weighted ? monomials_of_weight(dims, k) : monomials_of_order(dims, k, ctx.wcap);
    for (int i = 0; i < dims.d; ++i) {
        const Series& p = phi[i];
        for (Mono m : monos) {
            int a = mono_deg_z(dims, m), b = mono_deg_zbar(dims, m);
            if (a == 0 && b == 0) continue;  // pure-u parts are zero by the recovery convention
            Mono mc = mono_conj(dims, m);
            if (!mono_less(dims, mc, m))
                emit(out, "phi_real", mono_weight(dims, m), p.coeff(m) - p.coeff(mc).conj());
            if (b == 0) emit(out, "phi_harmonic", mono_weight(dims, m), p.coeff(m));
            if (ctx.mode == Mode::extrinsic && low_zbar_block(a, b, mono_deg_u(dims, m)))
                emit(out, "phi_low_zbar", mono_weight(dims, m), p.coeff(m));
        }
        if (ctx.mode == Mode::extrinsic && ctx.tr) {
            Series wk = weight_component(p, k);
            for (auto [a, b, l, id] :
                 {std::tuple{2, 2, 1, "phi_tr_22"}, std::tuple{3, 2, 2, "phi_tr2_32"},
                  std::tuple{3, 3, 3, "phi_tr3_33"}}) {
                if (a + b > k || (k - a - b) % 2 != 0) continue;
                Series img = ctx.tr->power(bigrade_component(wk, a, b).with_bound(kInfBound), l);
                Mono up = mono_set_exp(kMonoOne, var_u(dims, 0), (k - a - b) / 2);
                for (Mono tm : monomials_of_bidegree(dims, a - l, b - l))
                    emit(out, id, k, img.coeff(mono_mul(tm, up)));
            }
        }
    }
    return out;
}

inline std::vector<Rat> realify(const std::vector<CondValue>& v) {
    std::vector<Rat> out;
    out.reserve(2 * v.size());
    for (const auto& c : v) {
        out.push_back(c.value.re);
        out.push_back(c.value.im);
    }
    return out;
}

// deterministic Fisher-Yates with an LCG, for the permuted-assembly option
template <class T>
inline void shuffle_by_seed(std::vector<T>& v, unsigned seed) {
    if (seed == 0) return;
    unsigned s = seed;
    for (std::size_t i = v.size(); i > 1; --i) {
        s = s * 1664525u + 1013904223u;
        std::swap(v[i - 1], v[(s >> 7) % i]);
    }
}

/// First-order model: entries truncated to their weight-1 terms. The affine
/// step couplings only involve first-order data, so probes against the model
/// compute the true linear map; every step re-verifies this and falls back
/// to probing the live structure if the check fails.
inline AlmostCR first_order_model(const AlmostCR& s) {
    const Dims& dims = s.dims;
    int bound = s.bound();
    SeriesMat lzb(dims, bound, dims.n, dims.n), lw(dims, bound, dims.d, dims.n);
    auto keep_linear = [&](const Series& e) {
        std::vector<Term> t;
        for (const auto& term : e.terms())
            if (mono_weight(dims, term.m) == 1) t.push_back(term);
        return Series::from_terms(dims, bound, t);
    };
    for (int i = 0; i < dims.n; ++i)
        for (int j = 0; j < dims.n; ++j) lzb.at(i, j) = keep_linear(s.Lzbar.at(i, j));
    for (int i = 0; i < dims.d; ++i)
        for (int j = 0; j < dims.n; ++j) lw.at(i, j) = keep_linear(s.Lw.at(i, j));
    return AlmostCR(dims, lzb, lw);
}

inline std::string model_fingerprint(const AlmostCR& model) {
    std::string fp;
    for (int i = 0; i < model.dims.n; ++i)
        for (int j = 0; j < model.dims.n; ++j) fp += model.Lzbar.at(i, j).str() + ";";
    for (int i = 0; i < model.dims.d; ++i)
        for (int j = 0; j < model.dims.n; ++j) fp += model.Lw.at(i, j).str() + ";";
    return fp;
}

inline bool is_pinned_unknown(const Dims& dims, Mode mode, const Unknown& u) {
    if (mode == Mode::partial || mode == Mode::quasi) {
        if (!u.is_g) return mono_deg_zbar(dims, u.m) == 0;                   // pure f(z, 0, u)
        return mono_deg_z(dims, u.m) == 0 && mono_deg_zbar(dims, u.m) == 0;  // g(0, 0, u)
    }
    if (!u.is_g || u.im_part) return false;
    return mono_deg_z(dims, u.m) == 0 && mono_deg_zbar(dims, u.m) == 0 &&
           mono_deg_u(dims, u.m) == 2;  // g_{u^2} carries the r parameter
}

struct StepSolver {
    std::vector<Unknown> unknowns;
    std::vector<int> pinned;  // unknown indices with appended pin rows
    std::shared_ptr<ExactSolver> solver;
};

/// Assembles the affine step system by probing pushforward with unit
/// coefficient vectors against `probe_base`.
inline StepSolver assemble_step_solver(const StepContext& ctx, const AlmostCR& probe_base, int k,
                                       unsigned permute_seed) {
    StepSolver st;
    st.unknowns = step_unknowns(ctx.dims, ctx.mode, k, ctx.wcap, ctx.norm1_only);
    shuffle_by_seed(st.unknowns, permute_seed);

    std::vector<Rat> base = realify(step_conditions(ctx, probe_base, k));
    std::vector<SparseRow> rows(base.size());
    std::vector<std::map<int, Rat>> acc(base.size());
    for (std::size_t j = 0; j < st.unknowns.size(); ++j) {
        std::vector<Rat> x(st.unknowns.size(), Rat(0));
        x[j] = 1;
        Transform dt = delta_transform(ctx.dims, st.unknowns, x);
        std::vector<Rat> v = realify(step_conditions(ctx, pushforward(probe_base, dt), k));
        if (v.size() != base.size())
            throw std::logic_error("condition row space is not structure-independent");
        for (std::size_t i = 0; i < v.size(); ++i) {
            Rat c = v[i] - base[i];
            if (sgn(c) != 0) acc[i][int(j)] = std::move(c);
        }
    }
    for (std::size_t i = 0; i < base.size(); ++i) rows[i] = row_canonical(std::move(acc[i]));
    if (!ctx.norm1_only)
        for (std::size_t j = 0; j < st.unknowns.size(); ++j)
            if (is_pinned_unknown(ctx.dims, ctx.mode, st.unknowns[j])) {
                rows.push_back({{int(j), Rat(1)}});
                st.pinned.push_back(int(j));
            }
    st.solver = std::make_shared<ExactSolver>(int(st.unknowns.size()), std::move(rows));
    return st;
}

inline std::map<std::string, StepSolver>& solver_cache() {
    static std::map<std::string, StepSolver> c;
    return c;
}

inline StepSolver cached_step_solver(const StepContext& ctx, const AlmostCR& model, int k,
                                     unsigned permute_seed) {
    std::string key = std::string(mode_name(ctx.mode)) + (ctx.norm1_only ? "|n1" : "") +
                      "|k=" + std::to_string(k) + "|n=" + std::to_string(ctx.dims.n) +
                      ",d=" + std::to_string(ctx.dims.d) + "|w=" + std::to_string(ctx.wcap) +
                      "|s=" + std::to_string(permute_seed) + "|" + model_fingerprint(model);
    auto& cache = solver_cache();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    StepSolver st = assemble_step_solver(ctx, model, k, permute_seed);
    cache.emplace(key, st);
    return st;
}

struct StepOutcome {
    Transform delta;
    AlmostCR next;
};

enum class StepStatus { ok, singular, mismatch };

inline std::pair<StepStatus, std::optional<StepOutcome>> try_step(
    const StepContext& ctx, const StepSolver& st, const AlmostCR& cur, const Transform& total,
    int k, const FreeParams& params, const NormalizeOptions& opt) {
    const Dims& dims = ctx.dims;
    if (!st.solver->unique()) return {StepStatus::singular, std::nullopt};

    std::vector<Rat> rhs = realify(step_conditions(ctx, cur, k));
    for (auto& v : rhs) v = -v;
    for (int j : st.pinned) {
        const Unknown& u = st.unknowns[j];
        CRat target;
        if (!u.is_g)
            target = params.f0[u.comp].coeff(u.m) - total.f[u.comp].coeff(u.m);
        else if (ctx.mode == Mode::partial || ctx.mode == Mode::quasi)
            target = params.g0[u.comp].coeff(u.m) - total.g[u.comp].coeff(u.m);
        else
            target = CRat(params.r / 2) - total.g[u.comp].coeff(u.m);
        rhs.push_back(u.im_part ? target.im : target.re);
    }
    auto x = st.solver->solve(rhs);
    if (!x) return {StepStatus::mismatch, std::nullopt};

    Transform dt = delta_transform(dims, st.unknowns, *x);

    if (opt.superposition_check) {
        // residual(x+y) - residual(x) - residual(y) + residual(0) == 0 on the
        // live structure, for a deterministic split x + y of the solution
        std::vector<Rat> xa(x->size(), Rat(0)), xb(x->size(), Rat(0));
        unsigned s = 0x9e3779b9u ^ (unsigned(k) << 8) ^ unsigned(x->size());
        for (std::size_t i = 0; i < x->size(); ++i) {
            s = s * 1664525u + 1013904223u;
            ((s >> 9) & 1) ? xa[i] = (*x)[i] : xb[i] = (*x)[i];
        }
        std::vector<Rat> r0 = realify(step_conditions(ctx, cur, k));
        std::vector<Rat> ra = realify(
            step_conditions(ctx, pushforward(cur, delta_transform(dims, st.unknowns, xa)), k));
        std::vector<Rat> rb = realify(
            step_conditions(ctx, pushforward(cur, delta_transform(dims, st.unknowns, xb)), k));
        std::vector<Rat> rab = realify(step_conditions(ctx, pushforward(cur, dt), k));
        for (std::size_t i = 0; i < r0.size(); ++i)
            if (rab[i] - ra[i] - rb[i] + r0[i] != 0)
                throw std::logic_error("affine superposition check failed at step " +
                                       std::to_string(k));
    }

    AlmostCR next = pushforward(cur, dt);
    for (const auto& v : step_conditions(ctx, next, k))
        if (!v.value.is_zero()) return {StepStatus::mismatch, std::nullopt};
    return {StepStatus::ok, StepOutcome{std::move(dt), std::move(next)}};
}

inline StepOutcome run_step(const StepContext& ctx, const AlmostCR& cur, const Transform& total,
                            int k, const FreeParams& params, const NormalizeOptions& opt) {
    AlmostCR model = first_order_model(cur);
    auto [status, out] = try_step(ctx, cached_step_solver(ctx, model, k, opt.permute_seed), cur,
                                  total, k, params, opt);
    if (status == StepStatus::ok) return std::move(*out);

    // fall back to probing the live structure; exact by the affine property
    StepSolver live = assemble_step_solver(ctx, cur, k, opt.permute_seed);
    auto [status2, out2] = try_step(ctx, live, cur, total, k, params, opt);
    if (status2 == StepStatus::ok) return std::move(*out2);
    if (status2 == StepStatus::mismatch)
        throw std::logic_error("normalization step failed to zero its conditions at step " +
                               std::to_string(k));

    if (ctx.mode == Mode::intrinsic || ctx.mode == Mode::extrinsic) {
        LeviData levi = levi_at_0(cur);
        if (!levi.nondegenerate)
            throw NormalizeError(NormalizeError::Code::levi_degenerate, k, {},
                                 "degenerate Levi form at weight " + std::to_string(k));
        StrongNondegeneracy sn = is_strongly_nondegenerate(cur);
        std::vector<CRat> witness = sn.kernel_witness ? *sn.kernel_witness : std::vector<CRat>{};
        throw NormalizeError(NormalizeError::Code::not_strongly_nondegenerate, k,
                             std::move(witness),
                             "structure is not strongly nondegenerate; normalization system "
                             "singular at weight " +
                                 std::to_string(k));
    }
    throw std::logic_error("normalization system unexpectedly singular at step " +
                           std::to_string(k));
}

}  // namespace nf_detail

// ----------------------------------------------------------------------
/// First-order normalization: the unique quadratic transform making
/// L'^zbar_zbar = 0, L'^w_zbar antihermitian and both z-derivative forms
/// antisymmetric (the hermitian part of L^w_zbar is removed through the
/// g_{z zbar} block, all of L^zbar_zbar through fbar_{z zbar}, the symmetric
/// z^2 parts through the z^2 blocks). Idempotent on normalized input.
inline std::pair<Transform, AlmostCR> normalize_first_order(const AlmostCR& s) {
    using namespace nf_detail;
    const Dims& dims = s.dims;
    StepContext ctx{dims, Mode::partial, std::max(s.bound() - 2, 2), std::nullopt, true};
    AlmostCR model = first_order_model(s);
    StepSolver st = cached_step_solver(ctx, model, 2, 0);
    if (!st.solver->unique()) throw std::logic_error("first-order normalization system not unique");
    std::vector<Rat> rhs = realify(step_conditions(ctx, s, 2));
    for (auto& v : rhs) v = -v;
    auto x = st.solver->solve(rhs);
    if (!x) throw std::logic_error("first-order normalization system inconsistent");
    Transform t = delta_transform(dims, st.unknowns, *x);
    AlmostCR out = pushforward(s, t);
    if (!satisfies_first_order_normalization(out))
        throw std::logic_error("first-order normalization failed to verify");
    return {t, out};
}

/// Full verification of every normalization condition of the mode on a
/// result, step by step up to its valid weight. Exact residuals.
inline std::vector<ConditionResidual> verify_conditions(const NormalFormResult& result, Mode mode) {
    using namespace nf_detail;
    const Dims& dims = result.structure_out.dims;
    StepContext ctx{dims, mode, result.valid_weight, std::nullopt, false};
    if (mode == Mode::intrinsic || mode == Mode::extrinsic) {
        LeviData levi = levi_at_0(result.structure_out);
        if (levi.nondegenerate) ctx.tr.emplace(dims, levi.matrix);
    }
    std::map<std::pair<std::string, int>, bool> agg;
    for (int k = 2; k <= result.valid_weight; ++k)
        for (const auto& cv : step_conditions(ctx, result.structure_out, k)) {
            auto key = std::make_pair(std::string(cv.id), cv.weight);
            auto [it, fresh] = agg.try_emplace(key, true);
            if (!cv.value.is_zero()) it->second = false;
        }
    std::vector<ConditionResidual> out;
    for (const auto& [key, zero] : agg) out.push_back({key.first, key.second, zero});
    return out;
}

/// Shared pipeline driver; see the convenience wrappers below for the four
/// normal forms. Determinacy is weight-by-weight for the hypersurface-type
/// full modes and order-by-order for the partial and quasi-embedding modes;
/// each step solves one exact affine system assembled from pushforward
/// probes and is verified to zero its conditions before continuing.
inline NormalFormResult normalize(const AlmostCR& s_in, Mode mode, const FreeParams& params,
                                  const NormalizeOptions& opt = {}) {
    using namespace nf_detail;
    const Dims dims = s_in.dims;
    params.validate(dims);
    s_in.check();
    const int W = s_in.bound();
    const int wcap = W - 2;
    if (wcap < 2) throw PreconditionError("weight bound too small (need W >= 4)");
    if ((mode == Mode::intrinsic || mode == Mode::extrinsic) && dims.d != 1)
        throw PreconditionError("full normal forms require d = 1");

    StepContext ctx{dims, mode, wcap, std::nullopt, false};
    AlmostCR cur = s_in;
    Transform total = Transform::identity(dims);

    for (int k = 2; k <= wcap; ++k) {
        if ((mode == Mode::intrinsic || mode == Mode::extrinsic) && k == 4) {
            LeviData levi = levi_at_0(cur);
            if (!levi.nondegenerate)
                throw NormalizeError(NormalizeError::Code::levi_degenerate, 4, {},
                                     "degenerate Levi form");
            ctx.tr.emplace(dims, levi.matrix);
        }
        StepOutcome oc = run_step(ctx, cur, total, k, params, opt);
        cur = std::move(oc.next);
        total = compose_transforms(total, oc.delta, W);

        // pinned coefficients of the composite must land on their targets
        if (mode == Mode::partial || mode == Mode::quasi) {
            for (int j = 0; j < dims.n; ++j)
                for (Mono m : step_monomials(dims, mode, k, wcap, true))
                    if (mono_deg_zbar(dims, m) == 0 && total.f[j].coeff(m) != params.f0[j].coeff(m))
                        throw std::logic_error("pure f coefficient drifted from its target");
            for (int i = 0; i < dims.d; ++i)
                for (Mono m : step_monomials(dims, mode, k, wcap, false))
                    if (mono_deg_z(dims, m) == 0 && mono_deg_zbar(dims, m) == 0 &&
                        total.g[i].coeff(m) != params.g0[i].coeff(m))
                        throw std::logic_error("pure g coefficient drifted from its target");
        } else if (k == 4) {
            Mono u2 = mono_set_exp(kMonoOne, var_u(dims, 0), 2);
            if (total.g[0].coeff(u2) != CRat(params.r / 2))
                throw std::logic_error("g_{u^2} drifted from r/2");
        }
    }

    // canonical determined window: with g fixed through weight wcap and f
    // through wcap - 1, the w-rows are final to entry weight wcap - 1 and the
    // zbar-rows to wcap - 2; everything beyond is truncation-dependent
    for (int i = 0; i < dims.d; ++i)
        for (int j = 0; j < dims.n; ++j) cur.Lw.at(i, j) = cur.Lw.at(i, j).truncated(wcap - 1);
    for (int i = 0; i < dims.n; ++i)
        for (int j = 0; j < dims.n; ++j)
            cur.Lzbar.at(i, j) = cur.Lzbar.at(i, j).truncated(std::max(wcap - 2, 0));

    NormalFormResult result;
    result.transform = std::move(total);
    result.structure_out = std::move(cur);
    result.valid_weight = wcap;
    if (mode == Mode::extrinsic || mode == Mode::quasi) {
        EulerRestriction er = euler_restrict(result.structure_out);
        std::vector<Series> phi = recover_phi(dims, er.w, wcap);
        for (auto& p : phi) p = p.truncated(wcap);
        result.phi = std::move(phi);
    }
    result.residuals = verify_conditions(result, mode);
    for (const auto& r : result.residuals)
        if (!r.zero)
            throw std::logic_error(std::string("normalization left a nonzero residual: ") +
                                   r.condition + " at weight " + std::to_string(r.weight));
    return result;
}

inline NormalFormResult partial_normal_form(const AlmostCR& s, const FreeParams& params,
                                            const NormalizeOptions& opt = {}) {
    return normalize(s, Mode::partial, params, opt);
}

inline NormalFormResult intrinsic_normal_form(const AlmostCR& s, const Rat& r,
                                              const NormalizeOptions& opt = {}) {
    FreeParams p = FreeParams::zero(s.dims);
    p.r = r;
    return normalize(s, Mode::intrinsic, p, opt);
}

inline NormalFormResult extrinsic_normal_form(const AlmostCR& s, const Rat& r,
                                              const NormalizeOptions& opt = {}) {
    FreeParams p = FreeParams::zero(s.dims);
    p.r = r;
    return normalize(s, Mode::extrinsic, p, opt);
}

inline NormalFormResult quasi_embed(const AlmostCR& s, const FreeParams& params,
                                    const NormalizeOptions& opt = {}) {
    return normalize(s, Mode::quasi, params, opt);
}

}  // namespace crnf

#endif
