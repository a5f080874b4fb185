"""
Command-line front end.

Exit codes: 0 success, 2 usage error, 3 learner failure, 4 incompatible
verification inputs, 5 invalid invariant inputs.
"""

import argparse
import csv
import io as _io
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations_with_replacement, product

import numpy as np

from . import io
from .errors import (
    BosonMomentsError,
    IncompleteMoments,
    LearnerFailure,
    PhotonNumberMismatch,
)
from .invariants import (
    convertibility_witness,
    fock_moments,
    invariant_table,
    state_moments,
)
from .learner import (
    align_symplectic,
    align_unitary,
    constant_fock_bound,
    constant_fock_valid,
    find_q,
    find_v,
    find_v_fock,
    general_fock_bound,
    reconstruct_lambdas,
)
from .measurement import sample_budget_active, sample_budget_passive
from .moments import (
    NOISE_MODELS,
    NoiseSpec,
    add_noise,
    lambda_fock,
    operator_norm,
    sigma_fock,
    transform_lambda,
    transform_sigma,
)
from .oracle import MAX_PHOTONS, passive_fidelity, superposition_state
from .symplectic import is_symplectic, is_unitary, random_passive, random_symplectic

EXIT_OK, EXIT_USAGE, EXIT_LEARN, EXIT_VERIFY, EXIT_INVARIANTS = 0, 2, 3, 4, 5
CSV_COLUMNS = [
    "seed", "n", "f", "eps1", "eps2", "residual_aligned", "bound_value",
    "bound_holds", "fidelity_oracle", "wall_time_ms", "status",
]

log = logging.getLogger("bosonmoments")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _parse_f(text):
    try:
        f = [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse occupation vector {text!r}")
    if not f or any(x < 0 for x in f):
        raise UsageError(f"occupations must be non-negative integers, got {text!r}")
    return tuple(f)


def _parse_list(text, kind=float):
    try:
        return [kind(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}")


def _fmt(x):
    return format(float(x), ".17g")


def _child_seeds(seed, count):
    return [int(s.generate_state(1, dtype=np.uint64)[0])
            for s in np.random.SeedSequence(seed).spawn(count)]


# ---------------------------------------------------------------------------
# instances


def load_instance(path):
    data = io.read_json(path)
    try:
        f = tuple(int(x) for x in data["f"])
        mode = data["mode"]
        T = io.decode_matrix(data["transform"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a valid instance ({exc})")
    n = len(f)
    if mode == "passive":
        if T.shape != (n, n) or not is_unitary(T):
            raise UsageError(f"{path}: transform is not an {n}x{n} unitary")
        T = T.astype(complex)
    elif mode == "active":
        if T.shape != (2 * n, 2 * n) or not is_symplectic(T.real):
            raise UsageError(f"{path}: transform is not a {2 * n}x{2 * n} symplectic matrix")
        T = T.real
    else:
        raise UsageError(f"{path}: unknown mode {mode!r}")
    return f, mode, T, data


def cmd_gen(args):
    f = _parse_f(args.f)
    if args.n is not None and args.n != len(f):
        raise UsageError(f"--n {args.n} does not match {len(f)} occupations")
    n = len(f)
    if args.mode == "passive":
        T = random_passive(n, args.seed)
        meta = {}
    else:
        if args.s_max < 0:
            raise UsageError("--s-max must be non-negative")
        T = random_symplectic(n, args.s_max, args.seed)
        meta = {"s_max": args.s_max}
    io.write_text(args.out, io.dumps(io.make_instance(f, T, args.mode, args.seed, meta)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# learning


def _noise_specs(eps1, eps2, model, seed):
    s1, s2 = _child_seeds(seed, 2)
    return NoiseSpec(eps1, model, s1), NoiseSpec(eps2, model, s2)


def passive_bound(f, eps1, eps2):
    """Applicable guarantee ``(value, note)`` for a passive instance."""
    n = len(f)
    if len(set(f)) == 1:
        b = f[0]
        if b == 0:
            return None, "bound not applicable (vacuum input)"
        if not constant_fock_valid(eps2, n, b):
            return constant_fock_bound(eps2, n, b), "bound not applicable"
        return constant_fock_bound(eps2, n, b), "constant-occupation bound"
    if eps1 >= 0.5:
        return general_fock_bound(eps1, eps2, n, max(f)), "bound not applicable"
    return general_fock_bound(eps1, eps2, n, max(f)), "general-occupation bound"


def learn_instance(f, mode, T, eps1, eps2, model, seed):
    """Run one learning trial; returns ``(payload, summary)`` or raises ``LearnerFailure``."""
    spec1, spec2 = _noise_specs(eps1, eps2, model, seed)
    if mode == "passive":
        s1 = add_noise(transform_sigma(T, sigma_fock(f, 1)), spec1)
        s2 = add_noise(transform_sigma(T, sigma_fock(f, 2)), spec2)
        res = find_v_fock(s1, s2)
        report = align_unitary(res.V, T, res.g, f) if tuple(sorted(f)) == res.g else None
        bound, note = passive_bound(f, eps1, eps2)
        payload = {"V": io.encode_matrix(res.V), "g": list(res.g),
                   "diagnostics": res.diagnostics}
        summary = {"g": list(res.g),
                   "residual_aligned": None if report is None else report.residual,
                   "bound_value": bound, "bound_note": note}
        return payload, summary
    lam1 = transform_lambda(T, lambda_fock(f, 1))
    lam2 = transform_lambda(T, lambda_fock(f, 2))
    res = find_q(add_noise(lam1, spec1), add_noise(lam2, spec2))
    report = align_symplectic(res.Q, T, res.g, f) if tuple(sorted(f)) == res.g else None
    r1, r2 = reconstruct_lambdas(res.Q, res.g)
    payload = {"Q": io.encode_matrix(res.Q), "g": list(res.g),
               "R": io.encode_matrix(res.R), "diagnostics": res.diagnostics}
    summary = {
        "g": list(res.g),
        "residual_aligned": None if report is None else report.residual,
        "moment_residual": max(
            operator_norm(r1 - lam1) / operator_norm(lam1),
            operator_norm(r2 - lam2) / operator_norm(lam2),
        ),
        "bound_value": None,
        "bound_note": "no explicit constant for the active case",
    }
    return payload, summary


def cmd_learn(args):
    f, mode, T, _ = load_instance(args.instance)
    if args.eps1 < 0 or args.eps2 < 0:
        raise UsageError("noise levels must be non-negative")
    try:
        payload, summary = learn_instance(
            f, mode, T, args.eps1, args.eps2, args.noise_model, args.seed
        )
    except LearnerFailure as exc:
        failure = {"error": type(exc).__name__, "message": str(exc),
                   "diagnostics": exc.diagnostics}
        io.write_text(args.out, io.dumps(failure))
        sys.stderr.write(f"learner failure: {type(exc).__name__}: {exc}\n")
        return EXIT_LEARN
    io.write_text(args.out, io.dumps(payload))
    resid = summary["residual_aligned"]
    bound = summary["bound_value"]
    line = f"g={summary['g']} residual={'n/a' if resid is None else _fmt(resid)}"
    if bound is not None:
        line += f" bound={_fmt(bound)}"
    line += f" [{summary['bound_note']}]"
    if "moment_residual" in summary:
        line += f" moment_residual={_fmt(summary['moment_residual'])}"
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    stream.write(line + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification


def cmd_verify(args):
    f, mode, T, _ = load_instance(args.instance)
    result = io.read_json(args.result)
    n = len(f)
    if "error" in result:
        sys.stderr.write("result file records a learner failure\n")
        return EXIT_VERIFY
    try:
        g = tuple(int(x) for x in result["g"])
        key = "V" if mode == "passive" else "Q"
        M = io.decode_matrix(result[key])
    except (KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(f"result does not match a {mode} instance ({exc})\n")
        return EXIT_VERIFY
    if len(g) != n:
        sys.stderr.write("result and instance have different mode counts\n")
        return EXIT_VERIFY
    report = {"kind": mode, "f": list(f), "g": list(g)}
    if mode == "passive":
        if M.shape != (n, n) or not is_unitary(M):
            sys.stderr.write("V is not a unitary of the instance size\n")
            return EXIT_VERIFY
        if sum(f) != sum(g):
            report["fidelity"] = 0.0
            report["note"] = PhotonNumberMismatch.__name__
        elif sum(f) > MAX_PHOTONS:
            report["fidelity"] = None
            report["note"] = "too many photons for the permanent oracle"
        else:
            report["fidelity"] = passive_fidelity(T, M, f, g)
    else:
        M = M.real
        if M.shape != (2 * n, 2 * n) or not is_symplectic(M):
            sys.stderr.write("Q is not a symplectic matrix of the instance size\n")
            return EXIT_VERIFY
        lam1 = transform_lambda(T, lambda_fock(f, 1))
        lam2 = transform_lambda(T, lambda_fock(f, 2))
        r1, r2 = reconstruct_lambdas(M, g)
        report["gram_residual"] = operator_norm(M @ M.T - T @ T.T)
        report["lambda1_residual"] = operator_norm(r1 - lam1) / operator_norm(lam1)
        report["lambda2_residual"] = operator_norm(r2 - lam2) / operator_norm(lam2)
    sys.stdout.write(io.dumps(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# invariants


def load_moments(path):
    """Moment set from an instance file or a Fock-superposition file."""
    data = io.read_json(path)
    if "terms" in data:
        try:
            terms = [(tuple(int(x) for x in t["occ"]), io.decode_complex(t["amp"]))
                     for t in data["terms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise IncompleteMoments(f"{path}: malformed superposition ({exc})")
        if not terms:
            raise IncompleteMoments(f"{path}: superposition has no terms")
        cutoff = int(data.get("cutoff", max(max(o) for o, _ in terms) + 6))
        return state_moments(superposition_state(terms, cutoff))
    if "transform" in data:
        try:
            f, mode, T, _ = load_instance(path)
        except UsageError as exc:
            raise IncompleteMoments(str(exc))
        return fock_moments(f, T)
    raise IncompleteMoments(f"{path}: neither an instance nor a superposition")


def _value_json(value):
    if np.ndim(value) == 0:
        return complex(value)
    return [complex(z) for z in value]


def cmd_invariants(args):
    try:
        A = load_moments(args.state_a)
        if args.state_b is None:
            table = invariant_table(A, args.budget)
            out = [{"spec": v.spec.to_dict(), "value": _value_json(v.value)} for v in table]
            io.write_text(args.out, io.dumps(out))
            return EXIT_OK
        B = load_moments(args.state_b)
        w = convertibility_witness(A, B, args.budget)
    except (BosonMomentsError, OSError) as exc:
        sys.stderr.write(f"invariant input error: {exc}\n")
        return EXIT_INVARIANTS
    if w is None:
        out = {"witness": None, "result": f"none-up-to-budget {args.budget}"}
    else:
        out = {"spec": w.spec.to_dict(), "valueA": _value_json(w.value_a),
               "valueB": _value_json(w.value_b), "gap": w.gap}
    io.write_text(args.out, io.dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweeps


def sweep_fs(n, f_max, theorem, bs):
    if theorem == 1:
        return [(b,) * n for b in bs]
    out = []
    for f in combinations_with_replacement(range(f_max + 1), n):
        if len(set(f)) >= 2:
            out.append(f)
    return out


# absolute slack so exact instances (bound 0) are not failed by round-off
ROUNDOFF = 1e-10


def run_trial(theorem, f, eps1, eps2, seed, model, timing=False):
    """One sweep row as a dict of already formatted fields."""
    n = len(f)
    start = time.perf_counter()
    w_seed, n1, n2 = _child_seeds(seed, 3)
    W = random_passive(n, w_seed)
    row = {"seed": seed, "n": n, "f": "-".join(str(x) for x in f),
           "eps1": _fmt(eps1), "eps2": _fmt(eps2), "residual_aligned": "",
           "bound_value": "", "bound_holds": "", "fidelity_oracle": "",
           "wall_time_ms": "", "status": "ok"}
    try:
        s2 = add_noise(transform_sigma(W, sigma_fock(f, 2)), NoiseSpec(eps2, model, n2))
        if theorem == 1:
            b = f[0]
            V, _ = find_v(s2, b)
            g = tuple(f)
            bound = constant_fock_bound(eps2, n, b)
        else:
            s1 = add_noise(transform_sigma(W, sigma_fock(f, 1)), NoiseSpec(eps1, model, n1))
            res = find_v_fock(s1, s2)
            V, g = res.V, res.g
            bound = general_fock_bound(eps1, eps2, n, max(f))
        if g != tuple(sorted(f)):
            row["status"] = "wrong-occupations"
            row["bound_holds"] = "False"
        else:
            resid = align_unitary(V, W, g, f).residual
            row["residual_aligned"] = _fmt(resid)
            row["bound_value"] = _fmt(bound)
            row["bound_holds"] = str(resid <= bound + ROUNDOFF)
            if sum(f) <= MAX_PHOTONS:
                row["fidelity_oracle"] = _fmt(passive_fidelity(W, V, f, g))
    except LearnerFailure as exc:
        row["status"] = type(exc).__name__
        row["bound_holds"] = "False"
    if timing:
        row["wall_time_ms"] = _fmt(1000 * (time.perf_counter() - start))
    return row


def sweep_rows(theorem, ns, bs, f_max, eps1s, eps2s, seeds, model="gaussian-entry",
               seed_base=0, threads=1, timing=False):
    tasks = []
    for n in ns:
        for f in sweep_fs(n, f_max, theorem, bs):
            for e1, e2 in product(eps1s if theorem == 2 else [0.0], eps2s):
                for k in range(seeds):
                    tasks.append((f, e1, e2, k))
    trial_seeds = _child_seeds(seed_base, len(tasks)) if tasks else []

    def work(idx):
        f, e1, e2, k = tasks[idx]
        row = run_trial(theorem, f, e1, e2, trial_seeds[idx], model, timing)
        row["seed"] = k
        return (len(f), f, e1, e2, k), row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(tasks))))
    else:
        results = [work(i) for i in range(len(tasks))]
    results.sort(key=lambda item: item[0])
    return [row for _, row in results]


def rows_to_csv(rows):
    buf = _io.StringIO()
    buf.write("# schema=1\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def cmd_sweep(args):
    ns = _parse_list(args.n, int)
    bs = _parse_list(args.b, int)
    eps1s = _parse_list(args.eps1)
    eps2s = _parse_list(args.eps2)
    if not ns or not eps2s or args.seeds < 1 or (args.theorem == 1 and not bs):
        raise UsageError("sweep grid is empty")
    if any(n < 1 for n in ns) or any(e < 0 for e in eps1s + eps2s):
        raise UsageError("mode counts must be positive and noise levels non-negative")
    if args.theorem == 1 and any(b < 1 for b in bs):
        raise UsageError("constant occupations must be at least 1")
    rows = sweep_rows(args.theorem, ns, bs, args.f_max, eps1s, eps2s, args.seeds,
                      args.noise_model, args.seed, args.threads, args.timing)
    if not rows:
        raise UsageError("sweep grid is empty")
    io.write_text(args.out, rows_to_csv(rows))
    holds = sum(r["bound_holds"] == "True" for r in rows)
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    stream.write(f"bound holds in {holds}/{len(rows)} trials ({100 * holds / len(rows):.1f}%)\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# budgets


def cmd_budget(args):
    try:
        if args.mode == "passive":
            if args.l1 is None:
                raise UsageError("--l1 is required for passive budgets")
            b = sample_budget_passive(args.n, args.f_max, args.l1, args.alpha, args.c1, args.c2)
        else:
            b = sample_budget_active(args.n, args.f_max, args.s, args.alpha, args.beta,
                                     args.c1, args.c2)
    except ValueError as exc:
        raise UsageError(str(exc))
    io.write_text(args.out, io.dumps(b.to_dict()))
    return EXIT_OK


def _number(text):
    value = float(text)
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def build_parser():
    p = _Parser(prog="bosonmoments", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int)
    g.add_argument("--f", required=True, help="comma-separated occupations")
    g.add_argument("--mode", choices=("passive", "active"), default="passive")
    g.add_argument("--s-max", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen)

    l = sub.add_parser("learn", help="learn an instance from noisy moments")
    l.add_argument("--instance", required=True)
    l.add_argument("--eps1", type=float, default=0.0)
    l.add_argument("--eps2", type=float, default=0.0)
    l.add_argument("--noise-model", choices=NOISE_MODELS, default="gaussian-entry")
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--out", default="-")
    l.set_defaults(func=cmd_learn)

    v = sub.add_parser("verify", help="check a learned result with the oracles")
    v.add_argument("--instance", required=True)
    v.add_argument("--result", required=True)
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("invariants", help="invariant table or convertibility witness")
    i.add_argument("--state-a", required=True)
    i.add_argument("--state-b")
    i.add_argument("--budget", type=int, default=4, choices=(2, 4, 6, 8))
    i.add_argument("--out", default="-")
    i.set_defaults(func=cmd_invariants)

    s = sub.add_parser("sweep", help="bound-compliance sweep written as CSV")
    s.add_argument("--theorem", type=int, choices=(1, 2), default=1,
                   help="1: equal occupations, 2: mixed occupations")
    s.add_argument("--n", default="2,3")
    s.add_argument("--b", default="1", help="constant occupations for the equal-occupation sweep")
    s.add_argument("--f-max", type=int, default=2, 
                   help="largest occupation for the mixed-occupation sweep")
    s.add_argument("--eps1", default="1e-6")
    s.add_argument("--eps2", default="1e-5")
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise-model", choices=NOISE_MODELS, default="gaussian-entry")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="fill wall_time_ms")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("budget", help="sample-count calculator")
    b.add_argument("--mode", choices=("passive", "active"), required=True)
    b.add_argument("--n", type=_number, required=True)
    b.add_argument("--f-max", type=_number, required=True)
    b.add_argument("--l1", type=_number)
    b.add_argument("--s", type=_number, default=0)
    b.add_argument("--alpha", type=_number, default=1)
    b.add_argument("--beta", type=_number, default=1)
    b.add_argument("--c1", type=_number, default=1)
    b.add_argument("--c2", type=_number, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_budget)
    return p


def main(argv=None):
    level = os.environ.get("BM_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr)
    args = build_parser().parse_args(argv)
    log.info("running %s", args.command)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"bosonmoments {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"bosonmoments {args.command}: error: {exc}\n")
        return EXIT_USAGE
