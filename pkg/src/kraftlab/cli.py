"""Command-line interface.

Exit status: 0 when every checked inequality holds, 1 when one fails or a
collision witness is found, 2 for usage or input errors, 3 when an
enumeration budget is exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from ._budget import ENV_VAR, BudgetExceeded
from .converse import (
    LossFunction,
    best_lz_bound,
    delta_function,
    empirical_cond_entropy,
    heuristic_epsilon,
    individual_rate_bound,
    lz78_parse,
    max_block_bits,
    parse_predictor,
    prediction_lower_bound,
    predictive_code_length,
    read_sequence,
    run_predictor,
    sequence_distribution,
)
from .encoder import EncoderFormatError, _load_document, check_il, is_irreducible, parse_encoder
from .kraft import (
    collatz_wielandt,
    gki_check,
    is_irreducible_matrix,
    kraft_matrix,
    perron_vectors,
    spectral_radius,
    irreducible_entry_bound,
    zl_baseline,
    zl_checks,
)
from .lossy import lossy_gki_check, parse_quantizer
from .report import Check, Report, compare
from .si import (
    certify_lower,
    check_il_si,
    jsr_bracket,
    kraft_family,
    parse_family,
    parse_si_encoder,
    subinvariant_search,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _document_kind(doc) -> str:
    if "family" in doc:
        return "family"
    if "si_alphabet" in doc:
        return "si-encoder"
    if "initial_prediction" in doc:
        return "predictor"
    if "ell" in doc and ("map" in doc or "codebook" in doc):
        return "quantizer"
    return "encoder"


def _read(path: str):
    try:
        return _load_document(Path(path))
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None


def _family_from(doc):
    kind = _document_kind(doc)
    if kind == "family":
        return parse_family(doc)
    if kind == "si-encoder":
        return kraft_family(parse_si_encoder(doc))
    if kind == "encoder":
        from .si import KraftFamily

        e = parse_encoder(doc)
        return KraftFamily((kraft_matrix(e),), ("K",), e.l_max)
    raise UsageError(f"a {kind} file does not define a Kraft family")


def _il_check(verdict, names, symbol_names, si_names=None) -> Check:
    witness = None
    if verdict.witness is not None:
        if si_names is None:
            z, a, b = verdict.witness
            witness = {"state": names[z], "x": [symbol_names[i] for i in a], "x_prime": [symbol_names[i] for i in b]}
        else:
            z, w, a, b = verdict.witness
            witness = {
                "state": names[z],
                "si": [si_names[i] for i in w],
                "x": [symbol_names[i] for i in a],
                "x_prime": [symbol_names[i] for i in b],
            }
    return Check(
        f"no collision up to depth {verdict.checked_depth}",
        None,
        None,
        verdict.is_il_up_to_depth,
        witness,
        regime="exhaustive",
        note="a clean result is depth-bounded evidence, not a proof of losslessness",
    )


# -- verbs -----------------------------------------------------------------------


def cmd_validate(args) -> Report:
    doc = _read(args.path)
    kind = _document_kind(doc)
    rep = Report("validate", {"kind": kind})
    if kind == "encoder":
        e = parse_encoder(doc)
        rep.info.update(s=e.s, alpha=e.alpha, L_max=e.l_max, irreducible=is_irreducible(e))
    elif kind == "si-encoder":
        e = parse_si_encoder(doc)
        rep.info.update(s=e.s, alpha=e.alpha, beta=e.beta, L_max=e.l_max)
    elif kind == "predictor":
        p = parse_predictor(doc)
        rep.info.update(q=p.q, alpha=p.alpha)
    elif kind == "quantizer":
        q = parse_quantizer(doc, args.D)
        rep.info.update(ell=q.ell, D=q.D, max_block_distortion=q.max_distortion())
    else:
        fam = parse_family(doc)
        rep.info.update(members=list(fam.names), s=fam.s, exact=fam.exact)
    return rep


def cmd_gki(args) -> Report:
    e = parse_encoder(_read(args.path))
    verdict = check_il(e, args.il_depth, args.budget, args.workers)
    rep = gki_check(e, args.lmax_powers)
    rep.info["irreducible_entry_bound"] = irreducible_entry_bound(e)
    rep.add(_il_check(verdict, e.state_names, e.symbol_names))
    zl_ells = [l for l in args.lmax_powers if l <= args.zl_max]
    rep.info["zl_baseline"] = {str(l): zl_baseline(e.s, e.alpha, l) for l in zl_ells}
    rep.extend(zl_checks(e, zl_ells, args.budget))
    return rep


def cmd_il_check(args) -> Report:
    doc = _read(args.path)
    if _document_kind(doc) == "si-encoder":
        e = parse_si_encoder(doc)
        verdict = check_il_si(e, args.depth, args.budget)
        check = _il_check(verdict, e.state_names, e.symbol_names, e.si_names)
    else:
        e = parse_encoder(doc)
        verdict = check_il(e, args.depth, args.budget, args.workers)
        check = _il_check(verdict, e.state_names, e.symbol_names)
    rep = Report("il-check", {"checked_depth": verdict.checked_depth})
    rep.add(check)
    return rep


def cmd_spectral(args) -> Report:
    fam = _family_from(_read(args.path))
    rep = Report("spectral")
    for name, K in zip(fam.names, fam.matrices):
        spec = spectral_radius(K)
        entry = {"rho": spec.rho, "method": spec.method, "iterations": spec.iterations, "residual": spec.residual}
        if spec.cross_check is not None:
            entry["cross_check"] = spec.cross_check
        if is_irreducible_matrix(K):
            u, v = perron_vectors(K)
            entry.update(
                left_perron=list(u),
                right_perron=list(v),
                cw_lower_ones=collatz_wielandt(K, [1.0] * fam.s, "lower"),
                cw_upper_ones=collatz_wielandt(K, [1.0] * fam.s, "upper"),
            )
        rep.info[name] = entry
    return rep


def cmd_jsr(args) -> Report:
    fam = _family_from(_read(args.path))
    br = jsr_bracket(fam, args.depth, args.budget, args.samples, args.seed)
    search = subinvariant_search(fam, args.max_iter)
    word = [fam.names[i] for i in br.lower_word]
    rep = Report(
        "jsr",
        {
            "lower": br.lower,
            "upper": br.upper,
            "depth": br.depth,
            "upper_depth": br.upper_depth,
            "norm": br.norm,
            "certificate_word": word,
            "certificate_rho_root": certify_lower(fam, br.lower_word),
            "sampled_words": br.sampled_words,
            "subinvariant_status": search.status,
            "subinvariant_vector": search.vector,
        },
    )
    rep.add(compare("JSR lower bound <= 1", br.lower, 1.0, witness=word, tol=1e-9))
    return rep


def cmd_bounds(args) -> Report:
    e = parse_encoder(_read(args.encoder))
    x = read_sequence(args.sequence)
    z1 = e.state_id(args.z1) if args.z1 is not None else e.initial_state
    b = individual_rate_bound(e, z1, x, args.ell)
    rep = Report(
        "bounds",
        {
            "n": b.n,
            "extended_length": b.extended_length,
            "best_ell": b.best_ell,
            "empirical_cond_entropy": {str(k): v for k, v in b.entropies.items()},
            "stochastic_bound": {str(k): v for k, v in b.per_ell.items()},
            "cyclic_correction": b.correction,
        },
    )
    rep.add(Check("rate >= max_ell[H_ell - penalty/ell] - (s-1)Lmax/n", b.rhs, b.lhs, b.holds, b.best_ell, "float"))
    return rep


def cmd_lz(args) -> Report:
    x = read_sequence(args.sequence)
    parse = lz78_parse(x)
    n = len(x)
    rep = Report("lz", {"n": n, "c": parse.c, "phrases": len(parse.phrases)})
    rep.add(Check("phrases concatenate to the input", None, None, parse.joined() == tuple(x), regime="exact"))
    if n:
        eps = heuristic_epsilon(n)
        s, lm, actual = args.s, args.lmax, None
        if args.encoder:
            e = parse_encoder(_read(args.encoder))
            s, lm = e.s, e.l_max
            actual = e.run(e.initial_state, x)[0]
        value, ell = best_lz_bound(parse.c, n, args.ell, s, lm)
        rep.info.update(lz_bound=value, best_ell=ell, epsilon=eps, epsilon_model="heuristic: log2(log2 n)/log2 n")
        if actual is not None:
            rep.add(
                Check(
                    "rate >= c log c / n - min_ell[eps + penalty/ell] - (s-1)Lmax/n",
                    value,
                    len(actual) / n,
                    len(actual) / n >= value,
                    ell,
                    "float",
                    note="heuristic epsilon model; not a certified bound",
                )
            )
    return rep


def _loss_from(spec: str, alpha: int) -> LossFunction:
    if spec == "hamming":
        return LossFunction.hamming(alpha)
    try:
        vals = json.loads(spec)
    except json.JSONDecodeError:
        raise UsageError("--loss must be 'hamming' or a JSON list") from None
    if not isinstance(vals, list) or len(vals) != alpha:
        raise UsageError(f"--loss must list {alpha} values")
    return LossFunction(vals)


def cmd_predict(args) -> Report:
    p = parse_predictor(_read(args.predictor))
    x = read_sequence(args.sequence)
    if not x:
        raise UsageError("empty sequence")
    loss = _loss_from(args.loss, p.alpha)
    n = len(x) - len(x) % args.k
    x = x[:n]
    avg = run_predictor(p, loss, x)
    cl = predictive_code_length(p, loss, args.theta, args.k, x, args.base)
    h = empirical_cond_entropy(sequence_distribution(x, args.ell))
    block_max = max_block_bits(loss, args.theta, args.k, args.base)
    lower = prediction_lower_bound(p.q, args.k, args.ell, n, h, block_max, p.alpha, loss)
    rep = Report(
        "predict",
        {
            "n": n,
            "average_loss": avg,
            "code_length_bits": cl.bits,
            "empirical_cond_entropy": h,
            "delta_at_entropy": delta_function(loss, min(h, math.log2(p.alpha))),
            "base_regime": args.base,
        },
    )
    rep.add(compare("L(x^n) <= scale*sum(loss) + n log2 Z + n/k", cl.bits, cl.upper_bound, tol=1e-9))
    rep.add(compare("prediction loss lower bound <= average loss", lower, avg, tol=1e-9))
    return rep


def cmd_lossy(args) -> Report:
    q = parse_quantizer(_read(args.quantizer), args.D)
    e = parse_encoder(_read(args.coder))
    return lossy_gki_check(q, e)


def cmd_baseline(args) -> Report:
    e = parse_encoder(_read(args.path))
    rep = Report("baseline", {"s": e.s, "alpha": e.alpha})
    rep.extend(zl_checks(e, args.ell, args.budget))
    return rep


# -- plumbing ------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default=None, help="default: text on a terminal, else json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--budget", type=_positive(int), default=None, help=f"enumeration budget (else ${ENV_VAR}, else 2^24)")
    common.add_argument("--workers", type=_positive(int), default=1, help="processes for collision search")
    common.add_argument("--seed", type=int, default=1)

    p = argparse.ArgumentParser(prog="kraftlab", description="Kraft-matrix analysis of finite-state encoders")
    sub = p.add_subparsers(dest="verb", required=True)

    v = sub.add_parser("validate", parents=[common], help="check an input file against its schema")
    v.add_argument("path")
    v.add_argument("--D", type=float, default=None)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gki", parents=[common], help="all generalized Kraft inequalities plus a collision search")
    g.add_argument("path")
    g.add_argument("--lmax-powers", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64], metavar="L,...")
    g.add_argument("--il-depth", type=_positive(int), default=8)
    g.add_argument("--zl-max", type=int, default=8, help="largest block length for the ZL baseline")
    g.set_defaults(func=cmd_gki)

    i = sub.add_parser("il-check", parents=[common], help="bounded collision search")
    i.add_argument("path")
    i.add_argument("--depth", type=_positive(int), default=8)
    i.set_defaults(func=cmd_il_check)

    s = sub.add_parser("spectral", parents=[common], help="spectral radius and Perron vectors")
    s.add_argument("path")
    s.set_defaults(func=cmd_spectral)

    j = sub.add_parser("jsr", parents=[common], help="joint spectral radius bracket")
    j.add_argument("path")
    j.add_argument("--depth", type=_positive(int), default=8)
    j.add_argument("--samples", type=int, default=10_000)
    j.add_argument("--max-iter", type=_positive(int), default=1000)
    j.set_defaults(func=cmd_jsr)

    b = sub.add_parser("bounds", parents=[common], help="individual-sequence converse bound")
    b.add_argument("encoder")
    b.add_argument("sequence")
    b.add_argument("--ell", type=_int_list, default=None)
    b.add_argument("--z1", default=None, help="start state name (default: initial)")
    b.set_defaults(func=cmd_bounds)

    lz = sub.add_parser("lz", parents=[common], help="LZ78 parse and Ziv-inequality bound")
    lz.add_argument("sequence")
    lz.add_argument("--encoder", default=None)
    lz.add_argument("--s", type=_positive(int), default=1)
    lz.add_argument("--lmax", type=int, default=0)
    lz.add_argument("--ell", type=_int_list, default=list(range(1, 33)))
    lz.set_defaults(func=cmd_lz)

    pr = sub.add_parser("predict", parents=[common], help="finite-state predictor bounds")
    pr.add_argument("predictor")
    pr.add_argument("sequence")
    pr.add_argument("--theta", type=_positive(float), default=1.0)
    pr.add_argument("--k", type=_positive(int), default=1)
    pr.add_argument("--ell", type=_positive(int), default=4)
    pr.add_argument("--loss", default="hamming")
    pr.add_argument("--base", choices=["natural", "binary"], default="natural")
    pr.set_defaults(func=cmd_predict)

    lo = sub.add_parser("lossy", parents=[common], help="lossy Kraft chain for a quantizer and coder")
    lo.add_argument("quantizer")
    lo.add_argument("coder")
    lo.add_argument("--D", type=float, default=None)
    lo.set_defaults(func=cmd_lossy)

    bl = sub.add_parser("baseline", parents=[common], help="Ziv-Lempel block Kraft baseline")
    bl.add_argument("path")
    bl.add_argument("--ell", type=_int_list, default=list(range(1, 9)))
    bl.set_defaults(func=cmd_baseline)
    return p


def _emit(text: str, args) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _error(args, kind: str, message: str, **extra) -> None:
    doc = {"error": kind, "message": message, **extra}
    fmt = getattr(args, "format", None) or ("text" if sys.stdout.isatty() else "json")
    text = json.dumps(doc, indent=2, sort_keys=True) if fmt == "json" else f"error ({kind}): {message}"
    sys.stderr.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report = args.func(args)
    except BudgetExceeded as exc:
        _error(args, "budget", str(exc), completed_depth=exc.completed)
        return EXIT_BUDGET
    except (EncoderFormatError, UsageError, ValueError, OSError) as exc:
        _error(args, "input", str(exc))
        return EXIT_USAGE
    fmt = args.format or ("text" if sys.stdout.isatty() else "json")
    _emit(report.to_json() if fmt == "json" else report.to_text(), args)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
