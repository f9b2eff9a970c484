"""Command-line front end: ``geoctx <command> <file> [names...]``.

Every run produces one report. With ``--format json`` it is a single JSON
object::

    {"schema": 1, "command": {...}, "verdicts": [...], "witnesses": [...],
     "result": ..., "error": null, "elapsed_ms": null}

``verdicts`` lists ``{check, status, detail}`` in evaluation order.
``witnesses`` holds ``{check, witness}`` for every failing verdict, plus the
passing ones (atlases, for instance) when ``--witnesses`` is given.
``elapsed_ms`` is only filled in with ``--timing`` so that reports are
byte-for-byte reproducible by default.

Exit codes: 0 all checks pass, 1 some check fails, 2 inconclusive (search
budget exhausted), 3 the input could not be read or validated.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import (
    DSLError,
    GeoError,
    GluingConditionViolated,
    InternalError,
    NotAnOpenAtlas,
    PullbacksMissingInC,
    SearchBudgetExceeded,
)
from .geometry import (
    DEFAULT_BUDGET,
    check_atlas,
    decompose,
    glue,
    is_elementary_scheme,
    is_open_immersion,
    is_P_morphism_of_sheaves,
    is_schematic_morphism,
    overlap_generators,
    scheme_fibred_product,
)
from .presheaf import NatTrans, Presheaf, find_isomorphism, fibre_product_presheaf
from .report import FAIL, INCONCLUSIVE, PASS, Verdict, token_str
from .sheaves import is_epimorphism, is_monomorphism
from .dsl import Workspace, load_file
from .topology import is_sheaf, sheafify

SCHEMA = 1


class InputError(GeoError):
    pass


def presheaf_json(F: Presheaf) -> dict:
    C = F.category
    return {
        "values": {U: [token_str(s) for s in F.values[U]] for U in C.objects},
        "restrictions": {
            f: {token_str(s): token_str(t) for s, t in F.restrictions[f].items()}
            for f in C.arrows if not C.is_identity(f)
        },
    }


def nat_json(f: NatTrans) -> dict:
    C = f.source.category
    return {U: {token_str(s): token_str(t) for s, t in f.components[U].items()} for U in C.objects}


@dataclass
class Outcome:
    verdicts: list[Verdict] = field(default_factory=list)
    result: Any = None


# -- name resolution --------------------------------------------------------


def _sheaf_arg(ws: Workspace, names: list[str], k: int = 0) -> tuple[str, Presheaf]:
    """A presheaf by name, or the sheaf glued from a glue block."""
    name = names[k] if len(names) > k else None
    if name is None:
        if ws.presheaves:
            name = next(iter(ws.presheaves))
        elif ws.gluings:
            name = next(iter(ws.gluings))
        else:
            raise InputError("the document declares no presheaf or glue block")
    if name in ws.presheaves:
        return name, ws.presheaves[name]
    if name in ws.gluings:
        return name, glue(ws.context, ws.gluing_data(name)).sheaf
    raise InputError(f"no presheaf or glue block named {name!r}")


def _morphism_arg(ws: Workspace, names: list[str], k: int = 0) -> tuple[str, NatTrans]:
    name = names[k] if len(names) > k else None
    if name is None:
        if not ws.morphisms:
            raise InputError("the document declares no morphism")
        name = next(iter(ws.morphisms))
    if name not in ws.morphisms:
        raise InputError(f"no morphism named {name!r}")
    return name, ws.morphisms[name]


def _glue_arg(ws: Workspace, names: list[str]) -> str:
    name = names[0] if names else next(iter(ws.gluings), None)
    if name is None:
        raise InputError("the document declares no glue block")
    if name not in ws.gluings:
        raise InputError(f"no glue block named {name!r}")
    return name


# -- commands ---------------------------------------------------------------


def cmd_validate_context(ws: Workspace, names, budget) -> Outcome:
    C = ws.category
    result = {"objects": list(C.objects), "arrows": len(C.arrows), "P": [a for a in C.arrows if a in ws.P]}
    return Outcome(list(ws.report.verdicts), result)


def cmd_sheafify(ws: Workspace, names, budget) -> Outcome:
    name, F = _sheaf_arg(ws, names)
    site = ws.site
    aF, eta = sheafify(site, F)
    v = is_sheaf(site, aF)
    return Outcome([v], {"presheaf": name, "sheaf": presheaf_json(aF), "unit": nat_json(eta)})


def cmd_check_sheaf(ws: Workspace, names, budget) -> Outcome:
    name, F = _sheaf_arg(ws, names)
    return Outcome([is_sheaf(ws.site, F)], {"presheaf": name})


def _morphism_check(check: Callable[[Workspace, NatTrans, int], Verdict]):
    def run(ws: Workspace, names, budget) -> Outcome:
        name, f = _morphism_arg(ws, names)
        return Outcome([check(ws, f, budget)], {"morphism": name})
    return run


cmd_check_epi = _morphism_check(lambda ws, f, b: is_epimorphism(ws.site, f))
cmd_check_mono = _morphism_check(lambda ws, f, b: is_monomorphism(ws.site, f))
cmd_check_open_immersion = _morphism_check(lambda ws, f, b: is_open_immersion(ws.context, f))
cmd_check_p_morphism = _morphism_check(lambda ws, f, b: is_P_morphism_of_sheaves(ws.context, ws.context.P, f, b))
cmd_check_schematic = _morphism_check(lambda ws, f, b: is_schematic_morphism(ws.context, f, b))


def _scheme_verdicts(ws: Workspace, X: Presheaf, budget: int) -> list[Verdict]:
    sv = is_sheaf(ws.site, X)
    if not sv:
        return [sv, Verdict.fail("scheme", {"reason": "not a sheaf"}, "not a sheaf")]
    return [sv, is_elementary_scheme(ws.context, X, budget)]


def cmd_is_scheme(ws: Workspace, names, budget) -> Outcome:
    name, X = _sheaf_arg(ws, names)
    vs = _scheme_verdicts(ws, X, budget)
    result = {"sheaf": name}
    if vs[-1].data is not None:
        result["atlas"] = vs[-1].data.to_json()
    return Outcome(vs, result)


def cmd_glue(ws: Workspace, names, budget) -> Outcome:
    name = _glue_arg(ws, names)
    ctx = ws.context
    try:
        res = glue(ctx, ws.gluing_data(name))
    except GluingConditionViolated as e:
        w = {"condition": e.condition, **(e.witness or {})}
        return Outcome([Verdict.fail("gluing", w, str(e))], {"glue": name})
    vs = [Verdict.ok("gluing"), is_sheaf(ctx.site, res.sheaf), check_atlas(ctx, res.atlas)]
    return Outcome(vs, {"glue": name, "sheaf": presheaf_json(res.sheaf), "atlas": res.atlas.to_json()})


def cmd_decompose(ws: Workspace, names, budget) -> Outcome:
    name, X = _sheaf_arg(ws, names)
    vs = _scheme_verdicts(ws, X, budget)
    if not vs[-1]:
        return Outcome(vs, {"sheaf": name})
    ctx = ws.context
    atlas = vs[-1].data
    data = decompose(ctx, atlas)
    gens = overlap_generators(ctx, data)
    back = glue(ctx, data).sheaf
    iso = find_isomorphism(back, X)
    rt = Verdict.ok("round-trip") if iso is not None else Verdict.fail(
        "round-trip", {"glued": presheaf_json(back)}, "gluing the decomposition does not give the sheaf back")
    overlaps = [
        {"pair": [i + 1, j + 1], "generators": [[a, b] for a, b in gens[(i, j)]]}
        for (i, j) in sorted(gens) if i != j
    ]
    return Outcome(vs + [rt], {"sheaf": name, "charts": atlas.to_json(), "overlaps": overlaps})


def cmd_fibre_product(ws: Workspace, names, budget) -> Outcome:
    nf, f = _morphism_arg(ws, names, 0)
    ng, g = _morphism_arg(ws, names, 1) if len(names) > 1 else (nf, f)
    if f.target is not g.target and presheaf_json(f.target) != presheaf_json(g.target):
        raise InputError(f"{nf} and {ng} have different targets")
    g = NatTrans(g.source, f.target, g.components, check=False)
    ctx = ws.context
    try:
        cone, atlas = scheme_fibred_product(ctx, f, g, budget)
        v = Verdict.ok("scheme", {"atlas": atlas.to_json()}, data=atlas)
    except PullbacksMissingInC:
        cone = fibre_product_presheaf(f, g)
        v = is_elementary_scheme(ctx, cone.apex, budget)
    except NotAnOpenAtlas as e:
        cone = fibre_product_presheaf(f, g)
        v = Verdict.fail("scheme", {"reason": str(e), **(e.witness or {})}, "a factor is not an elementary scheme")
    result = {"morphisms": [nf, ng], "apex": presheaf_json(cone.apex)}
    if v.data is not None:
        result["atlas"] = v.data.to_json()
    return Outcome([v], result)


COMMANDS: dict[str, tuple[Callable[..., Outcome], str]] = {
    "validate-context": (cmd_validate_context, "site and GC1-GC6 verdicts"),
    "sheafify": (cmd_sheafify, "sheafify a presheaf"),
    "check-sheaf": (cmd_check_sheaf, "sheaf condition"),
    "check-epi": (cmd_check_epi, "epimorphism of sheaves"),
    "check-mono": (cmd_check_mono, "monomorphism of sheaves"),
    "check-open-immersion": (cmd_check_open_immersion, "open immersion"),
    "check-p-morphism": (cmd_check_p_morphism, "P-morphism of sheaves"),
    "check-schematic": (cmd_check_schematic, "schematic morphism"),
    "is-scheme": (cmd_is_scheme, "elementary scheme, with a minimal open atlas"),
    "glue": (cmd_glue, "glue a glue block"),
    "decompose": (cmd_decompose, "atlas and overlaps of a scheme"),
    "fibre-product": (cmd_fibre_product, "fibred product of two morphisms"),
}

_MAIN_CHECK = {
    "validate-context": "context", "sheafify": "sheaf", "check-sheaf": "sheaf", "check-epi": "epi",
    "check-mono": "mono", "check-open-immersion": "open-immersion", "check-p-morphism": "p-morphism",
    "check-schematic": "schematic", "is-scheme": "scheme", "glue": "gluing", "decompose": "scheme",
    "fibre-product": "scheme",
}


# -- driver -----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoctx", description="Geometric contexts and elementary schemes on finite sites.")
    p.add_argument("command", choices=sorted(COMMANDS), metavar="command",
                   help="one of: " + ", ".join(COMMANDS))
    p.add_argument("file", help="a .geo document (shipped fixtures may be named directly)")
    p.add_argument("names", nargs="*", help="presheaf, morphism or glue block names (default: first declared)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="bound on searched candidates")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--witnesses", action="store_true", help="also list witnesses of passing checks")
    p.add_argument("--timing", action="store_true", help="fill in elapsed_ms")
    return p


def run(argv: list[str]) -> tuple[dict, int]:
    """Execute one command; return the report and the exit code."""
    args = _parser().parse_args(argv)
    start = time.perf_counter()
    report: dict[str, Any] = {
        "schema": SCHEMA,
        "command": {"name": args.command, "file": args.file, "args": list(args.names), "budget": args.budget},
        "verdicts": [],
        "witnesses": [],
        "result": None,
        "error": None,
        "elapsed_ms": None,
    }
    fn, _ = COMMANDS[args.command]
    out: Outcome | None = None
    try:
        ws = load_file(args.file)
        out = fn(ws, list(args.names), args.budget)
    except SearchBudgetExceeded as e:
        out = Outcome([Verdict.unknown(_MAIN_CHECK[args.command], str(e), e.witness)])
    except InternalError:
        raise
    except (GeoError, FileNotFoundError) as e:
        err: dict[str, Any] = {"type": type(e).__name__, "message": str(e)}
        if isinstance(e, DSLError):
            err["line"], err["col"] = e.line, e.col
        elif isinstance(e, GeoError) and e.witness is not None:
            err["witness"] = e.witness
        report["error"] = err
    if out is None:
        code = 3
    else:
        for v in out.verdicts:
            report["verdicts"].append({"check": v.check, "status": v.status, "detail": v.detail})
            if v.witness is not None and (v.status != PASS or args.witnesses):
                report["witnesses"].append({"check": v.check, "witness": v.witness})
        report["result"] = out.result
        statuses = {v.status for v in out.verdicts}
        code = 1 if FAIL in statuses else 2 if INCONCLUSIVE in statuses else 0
    if args.timing:
        report["elapsed_ms"] = round((time.perf_counter() - start) * 1000, 3)
    report["_format"] = args.format
    return report, code


def render_json(report: dict) -> str:
    return json.dumps({k: v for k, v in report.items() if not k.startswith("_")}, indent=2, ensure_ascii=False) + "\n"


def render_text(report: dict) -> str:
    cmd = report["command"]
    lines = [" ".join(["geoctx", cmd["name"], cmd["file"], *cmd["args"]])]
    if report["error"]:
        e = report["error"]
        lines.append(f"error: {e['type']}: {e['message']}")
    for v in report["verdicts"]:
        lines.append(f"  {v['check']}: {v['status']}" + (f" ({v['detail']})" if v["detail"] else ""))
    for w in report["witnesses"]:
        lines.append(f"  witness {w['check']}: {json.dumps(w['witness'], ensure_ascii=False)}")
    if report["result"] is not None:
        lines.append("  result: " + json.dumps(report["result"], ensure_ascii=False))
    if report["elapsed_ms"] is not None:
        lines.append(f"  elapsed: {report['elapsed_ms']} ms")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    report, code = run(sys.argv[1:] if argv is None else argv)
    fmt = report.get("_format", "json")
    out = render_json(report) if fmt == "json" else render_text(report)
    if code == 3 and fmt == "text":
        sys.stderr.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
