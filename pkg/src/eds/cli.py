"""Command-line front end: load a system definition or built-in example,
run checks and emit human or machine reports."""
from __future__ import annotations

import argparse
import json
import sys

from . import catalog
from . import expr as ex
from .chart import Sampler
from .elliptic import (EllipticityError, check_darboux, check_decomposable,
                       check_elliptic, verify_darboux_invariant)
from .extension import verify_action, verify_group_model
from .flags import (FlagError, RankInstabilityError, SubBundleModel,
                    bracket_flag, derived_system)
from .sysdef import SysDefError, SystemDefinition
from .vessiot import AlgebraInvariants, verify_vessiot

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3

_GENERICITY_ERRORS = (RankInstabilityError, ex.DomainTooThinError,
                      ex.SingularPointError)


class _Usage(Exception):
    pass


def _chk(system, name, ok, ranks=None, witnesses=None):
    return {"name": name, "pass": bool(ok), "ranks": ranks,
            "witnesses": witnesses, "paper_ref": None}


# --------------------------------------------------------------- subcommands

def _sd_dplus(sd, sampler):
    if not sd.dplus:
        raise _Usage("this subcommand needs a [dplus] section")
    return SubBundleModel(sd.chart, "fields", sd.dplus, sampler,
                          sd.chart.guards, name="D+")


def _expect_checks(sd, rep, ES):
    got = {"q": rep.q, "m": rep.m, "d": rep.d, "n": rep.n,
           "classification": rep.classification,
           "elliptic": all(rep.elliptic_checks.values()),
           "decomposable": rep.decomposable,
           "darboux_integrable": rep.darboux_integrable,
           "rank_Vbar": ES.V.rank}
    out = []
    for key, want in sorted(sd.expect.items()):
        if key == "invariants":
            continue
        if key not in got:
            out.append(_chk(sd.name, "expect_%s" % key, False,
                            witnesses=["unknown expected fact %r" % key]))
            continue
        have = got[key]
        ok = str(have) == want
        out.append(_chk(sd.name, "expect_%s" % key, ok,
                        ranks={"expected": want, "got": str(have)}))
    return out


def _run_check(sd, sampler):
    Dp = _sd_dplus(sd, sampler)
    ES = check_elliptic(Dp, sampler)
    checks = [_chk(sd.name, "elliptic", all(ES.checks.values()),
                   ranks={"m": ES.m, "d": ES.d})]
    dec = None
    if sd.forms:
        I = SubBundleModel(sd.chart, "forms", list(sd.forms.values()),
                           sampler, sd.chart.guards, name="I")
        dec = check_decomposable(I, ES, sampler)
        checks.append(_chk(sd.name, "decomposable", dec))
    rep = check_darboux(ES, sampler, decomposable=dec)
    checks.append(_chk(sd.name, "darboux_integrable", rep.darboux_integrable,
                       ranks=rep.as_dict()))
    if "invariants" in sd.expect:
        invs = [p.strip() for p in sd.expect["invariants"].split(",")
                if p.strip()]
        ok = all(verify_darboux_invariant(ex.parse(f), ES, sampler)
                 for f in invs)
        checks.append(_chk(sd.name, "darboux_invariants", ok,
                           witnesses=invs))
    checks.extend(_expect_checks(sd, rep, ES))
    return checks


def _run_flags(sd, sampler):
    checks = []
    if sd.dplus:
        Dp = _sd_dplus(sd, sampler)
        D = SubBundleModel(sd.chart, "fields",
                           sd.dplus + [X.conj() for X in sd.dplus], sampler,
                           sd.chart.guards, name="D")
        _, frep = bracket_flag(D, sampler)
        checks.append(_chk(sd.name, "bracket_flag", True,
                           ranks={"table": frep.table}))
        _, prep = bracket_flag(Dp, sampler)
        checks.append(_chk(sd.name, "dplus_bracket_flag", True,
                           ranks={"table": prep.table}))
    if sd.forms:
        I = SubBundleModel(sd.chart, "forms", list(sd.forms.values()),
                           sampler, sd.chart.guards, name="I")
        ranks = [I.rank]
        cur = I
        while True:
            nxt = derived_system(cur, sampler)
            ranks.append(nxt.rank)
            if nxt.rank in (0, cur.rank):
                break
            cur = nxt
        if len(ranks) >= 2 and ranks[-1] == ranks[-2]:
            ranks = ranks[:-1]
        checks.append(_chk(sd.name, "derived_flag", True,
                           ranks={"table": ranks}))
    if not checks:
        raise _Usage("flags needs a [dplus] or [forms] section")
    for key in ("bracket_flag", "derived_flag", "dplus_bracket_flag"):
        want = sd.expect.get(key)
        if want is None:
            continue
        got = next((c for c in checks if c["name"] == key), None)
        ok = got is not None and str(got["ranks"]["table"]) == want
        checks.append(_chk(sd.name, "expect_%s" % key, ok,
                           ranks={"expected": want,
                                  "got": None if got is None
                                  else str(got["ranks"]["table"])}))
    return checks


def _run_vessiot(sd, sampler, basepoint=None):
    if sd.coframe is None:
        raise _Usage("vessiot needs a [coframe] section")
    cf = sd.coframe
    if basepoint:
        assign = {}
        for piece in basepoint.split(","):
            if "=" not in piece:
                raise _Usage("bad --basepoint entry %r" % piece)
            nm, val = piece.split("=", 1)
            e = ex.normalize(ex.parse(val.strip()))
            if not e.is_const():
                raise _Usage("--basepoint value not constant: %r" % piece)
            assign[nm.strip()] = e.const_value()
        cf = type(cf)(cf.chart, cf.theta, cf.eta, cf.sigma,
                      basepoint=cf.chart.basepoint_assignment(assign),
                      guards=cf.guards, name=cf.name)
    vrep = verify_vessiot(cf, sampler)
    ctable = sorted([list(k) + [str(v)] for k, v in vrep.C.entries().items()])
    checks = [_chk(sd.name, "vessiot_coframe", vrep.passed,
                   ranks={"C": ctable}, witnesses=vrep.failures())]
    inv = AlgebraInvariants(vrep.C)
    summary = inv.summary()
    summary["killing_signature"] = list(summary["killing_signature"])
    summary["derived_dims"] = list(summary["derived_dims"])
    checks.append(_chk(sd.name, "vessiot_algebra", True, ranks=summary))
    want = sd.expect.get("killing_signature")
    if want is not None:
        checks.append(_chk(
            sd.name, "expect_killing_signature",
            str(tuple(inv.killing_signature)) == want,
            ranks={"expected": want,
                   "got": str(tuple(inv.killing_signature))}))
    return checks


def _run_extend(sd, sampler):
    if sd.group is None:
        raise _Usage("extend needs a [group] section")
    grep = verify_group_model(sd.group, sampler)
    checks = [_chk(sd.name, "group_model", grep.passed,
                   witnesses=grep.failures())]
    if sd.action is not None:
        arep = verify_action(sd.action, sampler)
        checks.append(_chk(sd.name, "group_action", arep.passed,
                           witnesses=arep.failures()))
    return checks


_EXAMPLE_FILTERS = {
    "check": ("elliptic", "decomposable", "darboux", "cauchy", "conformal",
              "normal", "singular"),
    "flags": ("flag", "rank"),
    "vessiot": ("vessiot", "structure", "killing", "semisimple", "omega",
                "polarized", "one_adapted", "algebra"),
    "extend": ("extension", "group", "action", "transvers", "contact",
               "quotient", "prolong", "symmetry"),
    "solve-verify": ("solution", "residual", "schwarzian", "holomorphy"),
}


def _run_example(cmd, name, sampler_args):
    seed, samples, long = sampler_args
    rep = catalog.run_entry(name, seed=seed, samples=samples, long=long)
    checks = rep.checks
    if cmd in _EXAMPLE_FILTERS:
        keys = _EXAMPLE_FILTERS[cmd]
        sub = [c for c in checks if any(k in c["name"] for k in keys)]
        if not sub:
            raise _Usage("example %r has no checks for subcommand %r"
                         % (name, cmd))
        checks = sub
    return rep.name, checks


# --------------------------------------------------------------------- main

def _build_parser():
    p = argparse.ArgumentParser(
        prog="eds",
        description="Verify elliptic Darboux-integrable systems.")
    sub = p.add_subparsers(dest="cmd")

    def common(sp, system=True):
        if system:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--system", metavar="FILE",
                           help=".eds system-definition file")
            g.add_argument("--example", metavar="NAME",
                           help="built-in example name")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--samples", type=int, default=8)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--long", action="store_true",
                        help="enable long optional verification stages")

    for cmd, hlp in [("check", "elliptic/decomposable/Darboux report"),
                     ("flags", "derived-flag rank tables"),
                     ("vessiot", "coframe verification and Lie algebra"),
                     ("extend", "group model and action certification"),
                     ("solve-verify", "solution-formula residuals")]:
        sp = sub.add_parser(cmd, help=hlp)
        common(sp)
        if cmd == "vessiot":
            sp.add_argument("--basepoint", metavar="ASSIGN",
                            help='e.g. "z=0,xi=0,W=i"')

    sp = sub.add_parser("example", help="run every check of one example")
    sp.add_argument("name", metavar="NAME")
    common(sp, system=False)

    sp = sub.add_parser("list-examples", help="list built-in examples")
    sp.add_argument("--json", action="store_true")
    return p


def _emit(name, seed, checks, as_json, out):
    if as_json:
        doc = {"system": name, "seed": seed, "checks": checks}
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return
    for c in checks:
        line = "[%s] %s" % ("PASS" if c["pass"] else "FAIL", c["name"])
        if c.get("ranks"):
            line += "  %s" % json.dumps(c["ranks"], sort_keys=True)
        if c.get("witnesses") and not c["pass"]:
            line += "  witnesses=%s" % json.dumps(c["witnesses"])
        out.write(line + "\n")
    n_bad = sum(1 for c in checks if not c["pass"])
    out.write("%s: %d checks, %d failed\n" % (name, len(checks), n_bad))


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0, None) else 0
    if args.cmd is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    if args.cmd == "list-examples":
        names = catalog.list_entries()
        if args.json:
            doc = [{"name": nm, "title": catalog.entry_title(nm)}
                   for nm in names]
            sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        else:
            for nm in names:
                sys.stdout.write("%-16s %s\n" % (nm, catalog.entry_title(nm)))
        return EXIT_OK

    try:
        if args.cmd == "example":
            name, checks = _run_example(None, args.name,
                                        (args.seed, args.samples, args.long))
        elif args.example:
            name, checks = _run_example(args.cmd, args.example,
                                        (args.seed, args.samples, args.long))
        elif args.system:
            try:
                sd = SystemDefinition.load(args.system)
            except OSError as err:
                sys.stderr.write("eds: cannot read %s: %s\n"
                                 % (args.system, err))
                return EXIT_USAGE
            sampler = Sampler(seed=args.seed, k=args.samples)
            name = sd.name
            if args.cmd == "check":
                checks = _run_check(sd, sampler)
            elif args.cmd == "flags":
                checks = _run_flags(sd, sampler)
            elif args.cmd == "vessiot":
                checks = _run_vessiot(sd, sampler,
                                      getattr(args, "basepoint", None))
            elif args.cmd == "extend":
                checks = _run_extend(sd, sampler)
            else:
                raise _Usage("solve-verify requires --example")
        else:
            raise _Usage("one of --system or --example is required")
    except (_Usage, SysDefError, catalog.CatalogError) as err:
        sys.stderr.write("eds: %s\n" % err)
        return EXIT_USAGE
    except _GENERICITY_ERRORS as err:
        sys.stderr.write("eds: non-generic configuration: %s\n" % err)
        return EXIT_UNSTABLE
    except (EllipticityError, FlagError) as err:
        sys.stderr.write("eds: %s\n" % err)
        return EXIT_FAILED

    _emit(name, args.seed, checks, args.json, sys.stdout)
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
