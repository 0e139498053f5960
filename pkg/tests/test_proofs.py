from __future__ import annotations

import random

import pytest

from leaklab import assertions as asrt
from leaklab import lang, proofs, semantics
from leaklab.errors import AnnotationError

from conftest import load_program, trivially_annotate

L = lang.LocationId


def annotated_from(src: str) -> asrt.AnnotatedProgram:
    return asrt.annotate_program(lang.parse_program(src))


class TestSequentialVcs:
    def test_single_assignment_triple(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\n"
            "thread A { {| x = 0 |} x = x + 1; } post {| x = 1 |}")
        vcs, _ = proofs.gen_sequential_vcs(annotated, 0)
        assert len(vcs) == 1
        vc = vcs[0]
        assert isinstance(vc.stmt, lang.Assign)
        assert proofs.discharge_vc(vc, annotated.program).status == "valid"

    def test_wrong_postcondition_counterexample(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\n"
            "thread A { {| x = 0 |} x = x + 1; } post {| x = 0 |}")
        vcs, _ = proofs.gen_sequential_vcs(annotated, 0)
        result = proofs.discharge_vc(vcs[0], annotated.program)
        assert result.status == "counterexample"
        assert result.counterexample["store"] == {"x": 0}

    def test_while_invariant_yields_two_vcs(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\n"
            "thread A { {| x <= 3 |} while x < 3 do { x = x + 1; }; }"
            " post {| x = 3 |}")
        vcs, _ = proofs.gen_sequential_vcs(annotated, 0)
        assert len(vcs) == 2  # body preservation and loop exit
        for vc in vcs:
            assert proofs.discharge_vc(vc, annotated.program).status == "valid"

    def test_atomic_region_with_ghost(self):
        annotated = annotated_from(
            "ghost V0 : int[0..4];\n"
            "var sem : int[0..1] label low = 1;\n"
            "var v : int[0..4] label low = 0;\n"
            "thread T1 {\n"
            "  {| sem = 1 and v = V0 |}\n"
            "  await sem > 0 then {\n"
            "    sem = sem - 1; print('a'); v = v + 1; print('b'); sem = sem + 1;\n"
            "  };\n"
            "} post {| sem = 1 and v = V0 + 1 |}")
        vcs, _ = proofs.gen_sequential_vcs(annotated, 0)
        assert len(vcs) == 1
        assert isinstance(vcs[0].stmt, lang.Await)
        assert proofs.discharge_vc(vcs[0], annotated.program).status == "valid"

    def test_missing_annotation_names_location(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\n"
            "thread A { {| true |} x = 1; x = 2; } post {| true |}")
        with pytest.raises(AnnotationError, match="A.l1"):
            proofs.gen_sequential_vcs(annotated, 0)

    def test_missing_post_rejected(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\nthread A { {| true |} x = 1; }")
        with pytest.raises(AnnotationError, match="post"):
            proofs.gen_sequential_vcs(annotated, 0)

    def test_branch_entries_inherit_guard(self):
        annotated = annotated_from(
            "var x : int[0..3] label low = 0;\n"
            "var h : int[0..1] label high = secret;\n"
            "thread A {\n"
            "  {| x = 0 |}\n"
            "  if h then { x = 1; } else { x = 2; };\n"
            "  {| x = 1 or x = 2 |}\n"
            "  print(x);\n"
            "} post {| x = 1 or x = 2 |}")
        vcs, _ = proofs.gen_sequential_vcs(annotated, 0)
        for vc in vcs:
            assert proofs.discharge_vc(vc, annotated.program).status == "valid"


DISJOINT = """
var x : int[0..3] label low = 0;
var y : int[0..3] label low = 0;
thread A { {| x = 0 |} x = x + 1; } post {| x = 1 |}
thread B { {| y = 0 |} y = y + 1; } post {| y = 1 |}
"""

INTERFERING = """
var x : int[0..3] label low = 0;
var y : int[0..3] label low = 0;
thread A { {| x = 0 |} y = x; } post {| true |}
thread B { {| true |} x = 1; } post {| true |}
"""


class TestInterferenceVcs:
    def test_disjoint_threads_all_valid(self):
        annotated = annotated_from(DISJOINT)
        vcs = proofs.gen_interference_vcs(annotated)
        assert vcs
        for vc in vcs:
            assert vc.kind == proofs.INTERFERENCE
            assert proofs.discharge_vc(vc, annotated.program).status == "valid"

    def test_classic_interference_counterexample(self):
        annotated = annotated_from(INTERFERING)
        vcs = proofs.gen_interference_vcs(annotated)
        bad = [proofs.discharge_vc(vc, annotated.program) for vc in vcs]
        cxs = [r for r in bad if r.status == "counterexample"]
        assert cxs
        assert cxs[0].counterexample["store"]["x"] == 0

    def test_semaphore_pair_region_pre_protected_across_threads(self):
        p = load_program("semaphore_pair_annotated.cwl")
        annotated = asrt.annotate_program(p)
        vcs = proofs.gen_interference_vcs(annotated)
        # T1's acquire must preserve the pre of T2's region, and vice versa.
        wanted = [vc for vc in vcs
                  if "T1.l0 preserves pre of T2.l2" in vc.provenance
                  or "T2.l2 preserves pre of T1.l0" in vc.provenance]
        assert len(wanted) == 2

    def test_strict_stability_extends_to_prints(self):
        p = load_program("semaphore_pair_annotated.cwl")
        annotated = asrt.annotate_program(p)
        strict = proofs.gen_interference_vcs(annotated, strict_stability=True)
        lax = proofs.gen_interference_vcs(annotated, strict_stability=False)
        assert len(strict) > len(lax)


class TestLeakyVcs:
    def test_semaphore_pair_three_triple_families(self):
        p = load_program("semaphore_pair_annotated.cwl")
        annotated = asrt.annotate_program(p)
        vcs, notices = proofs.gen_leaky_vcs(annotated)
        stab = [vc for vc in vcs if "respects post" in vc.provenance]
        pres = [vc for vc in vcs if "respects pre" in vc.provenance]
        keep = [vc for vc in vcs if "preserves postulate" in vc.provenance]
        rules = [vc for vc in vcs if "rule" in vc.provenance]
        # T1 contributes its region and two top-level assignments as S.
        assert len(stab) == len(pres) == len(keep) == 3
        assert len(rules) == 2
        for vc in vcs:
            assert proofs.discharge_vc(vc, p).status == "valid"

    def test_no_marks_notice(self, semaphore_pair):
        annotated = trivially_annotate(semaphore_pair)
        vcs, notices = proofs.gen_leaky_vcs(annotated)
        assert vcs == []
        assert any("no leak postulates" in n for n in notices)

    def test_secret_only_postulate_is_stable(self, semaphore_pair):
        t2 = semaphore_pair.thread_index("T2")
        annotated = trivially_annotate(
            semaphore_pair, leaky={L(t2, 7): asrt.parse_assertion("h = 0 or h != 0")})
        vcs, notices = proofs.gen_leaky_vcs(annotated)
        assert any("not rule-form" in n for n in notices)
        for vc in vcs:
            assert proofs.discharge_vc(vc, semaphore_pair).status == "valid"


class TestIsolatedPathDuration:
    def test_region_thread_paths(self, region_thread):
        d0 = proofs.isolated_path_duration(region_thread, 0, L(0, 0), L(0, 7), {"h": 0})
        d1 = proofs.isolated_path_duration(region_thread, 0, L(0, 0), L(0, 7), {"h": 1})
        assert (d0, d1) == (3, 6)

    def test_blocked_region_gives_none(self):
        p = lang.parse_program(
            "var h : int[0..1] label high = secret;\n"
            "var g : int[0..1] label low = 0;\n"
            "thread A { print('s'); await g > 0 then { skip; }; print('e'); }")
        assert proofs.isolated_path_duration(p, 0, L(0, 0), L(0, 2), {"h": 0}) is None

    def test_loop_within_budget(self):
        p = lang.parse_program(
            "var h : int[0..1] label high = secret;\n"
            "var i : int[0..5] label low = 0;\n"
            "thread A { print('s'); while i < 3 do { i = i + 1; }; print('e'); }")
        # s(1) + 4 guard evaluations + 3 increments = 8 units between arrivals.
        assert proofs.isolated_path_duration(p, 0, L(0, 0), L(0, 3), {"h": 0}) == 8


class TestDischarge:
    def test_vacuous_guard_states_ignored(self, semaphore_pair):
        t2 = semaphore_pair.thread_index("T2")
        region = semaphore_pair.statement_at(L(t2, 2))
        vc = proofs.VC(
            pre=asrt.parse_assertion("sem = 0"),
            stmt=region,
            post=asrt.parse_assertion("sem = 0"),
            kind=proofs.INTERFERENCE, provenance="blocked region is vacuous")
        assert proofs.discharge_vc(vc, semaphore_pair).status == "valid"

    def test_domain_exit_is_vacuous(self):
        p = lang.parse_program(
            "var x : int[0..3] label low = 0;\nthread A { x = x + 1; }")
        vc = proofs.VC(
            pre=asrt.parse_assertion("true"),
            stmt=p.threads[0].body[0],
            post=asrt.parse_assertion("x >= 1"),
            kind=proofs.SEQUENTIAL, provenance="overflow states drop out")
        assert proofs.discharge_vc(vc, p).status == "valid"

    def test_tolerance_reaches_approx(self):
        p = lang.parse_program("var x : int[0..6] label low = 3;\nthread A { skip; }")
        vc = proofs.VC(
            pre=asrt.parse_assertion("x = 4"),
            stmt=None,
            post=asrt.parse_assertion("approx(x, 3)"),
            kind=proofs.SEQUENTIAL, provenance="tolerance plumbing")
        assert proofs.discharge_vc(vc, p, tolerance=0).status == "counterexample"
        assert proofs.discharge_vc(vc, p, tolerance=1).status == "valid"

    def test_budget_exceeded_reports_size(self, semaphore_pair):
        vc = proofs.VC(
            pre=asrt.parse_assertion("v = 0"),
            stmt=None,
            post=asrt.parse_assertion("v = 0"),
            kind=proofs.SEQUENTIAL, provenance="tiny")
        result = proofs.discharge_vc(vc, semaphore_pair, max_states=2)
        assert result.status == "undischarged"
        assert "budget" in result.reason

    def test_counterexample_self_validates(self):
        rng = random.Random(20260810)
        pool = ["true", "x = 0", "x = 1", "x <= 1", "y = 0", "x = y"]
        stmts = ["x = 0;", "x = 1;", "x = x + 1;", "y = x;", "skip;", "print(x);"]
        seen_counterexamples = 0
        for trial in range(100):
            n_threads = rng.randint(1, 2)
            src = ["var x : int[0..2] label low = 0;",
                   "var y : int[0..2] label low = 0;"]
            for t in range(n_threads):
                body = "".join(
                    f"  {{| {rng.choice(pool)} |}}\n  {rng.choice(stmts)}\n"
                    for _ in range(rng.randint(1, 3)))
                src.append(f"thread T{t} {{\n{body}}} post {{| {rng.choice(pool)} |}}")
            annotated = annotated_from("\n".join(src))
            program = annotated.program
            vcs = []
            for t in range(n_threads):
                seq, _ = proofs.gen_sequential_vcs(annotated, t)
                vcs += seq
            vcs += proofs.gen_interference_vcs(annotated)
            for vc in vcs:
                result = proofs.discharge_vc(vc, program)
                if result.status != "counterexample":
                    continue
                seen_counterexamples += 1
                store = result.counterexample["store"]
                assert asrt.eval_assertion(vc.pre, store, {}, 0)
                if vc.stmt is None:
                    post_store = dict(store)
                else:
                    executed = proofs._execute_atomic(
                        vc.stmt, store, 0, semantics.CostModel(),
                        {d.name: d.domain for d in program.declarations})
                    assert executed is not None
                    post_store = executed[0]
                assert not asrt.eval_assertion(vc.post, post_store, {}, 0)
        assert seen_counterexamples > 10


class TestCheckProof:
    def test_semaphore_pair_certified(self):
        annotated = asrt.annotate_program(load_program("semaphore_pair_annotated.cwl"))
        result = proofs.check_proof(annotated)
        assert result.overall == "proven"
        assert "certified leaky" in result.message and "l7" in result.message

    def test_inverted_consequents_refuted(self):
        annotated = asrt.annotate_program(
            load_program("semaphore_pair_inverted.cwl"))
        result = proofs.check_proof(annotated)
        assert result.overall == "refuted"
        assert result.message == "leak not established (assertions interfered with)"
        flipped = [vc for vc, r in result.by_status("counterexample")]
        assert all(vc.kind == proofs.LEAKY for vc in flipped)

    def test_valid_outline_without_marks(self):
        annotated = annotated_from(DISJOINT)
        result = proofs.check_proof(annotated)
        assert result.overall == "proven"
        assert result.message == "functionally non-interfering; no leak assertions checked"


class TestSmtlib:
    def test_valid_triple_script_shape(self):
        p = lang.parse_program("var x : int[0..3] label low = 0;\nthread A { x = x + 1; }")
        vc = proofs.VC(asrt.parse_assertion("x = 0"), p.threads[0].body[0],
                       asrt.parse_assertion("x = 1"), proofs.SEQUENTIAL, "demo")
        text = proofs.emit_smtlib(vc, p)
        assert "(declare-const x Int)" in text
        assert "(check-sat)" in text
        assert "(assert (not" in text

    def test_region_encoded_as_equality_chain(self, region_thread):
        region = region_thread.statement_at(L(0, 2))
        vc = proofs.VC(asrt.parse_assertion("sem = 1"), region,
                       asrt.parse_assertion("sem = 1"), proofs.SEQUENTIAL, "demo")
        text = proofs.emit_smtlib(vc, region_thread)
        assert text.count("declare-const sem") >= 3  # initial and two primes

    def test_quantifier_expanded(self, region_thread):
        vc = proofs.VC(asrt.parse_assertion("forall q in 0..1 : q >= 0"), None,
                       asrt.parse_assertion("true"), proofs.SEQUENTIAL, "demo")
        text = proofs.emit_smtlib(vc, region_thread)
        assert "forall" not in text

    def test_unsupported_loop_in_region(self):
        p = lang.parse_program(
            "var x : int[0..3] label low = 0;\n"
            "thread A { await true then { while x < 2 do { x = x + 1; }; }; }")
        vc = proofs.VC(asrt.parse_assertion("true"), p.threads[0].body[0],
                       asrt.parse_assertion("true"), proofs.SEQUENTIAL, "demo")
        with pytest.raises(Exception, match="unsupported construct"):
            proofs.emit_smtlib(vc, p)

    def test_discharge_agrees_with_solver(self):
        z3 = pytest.importorskip("z3")
        annotated = asrt.annotate_program(load_program("semaphore_pair_annotated.cwl"))
        program = annotated.program
        vcs = []
        for t in range(len(program.threads)):
            seq, _ = proofs.gen_sequential_vcs(annotated, t)
            vcs += seq
        vcs += proofs.gen_interference_vcs(annotated)
        leaky, _ = proofs.gen_leaky_vcs(annotated)
        vcs += leaky
        for vc in vcs:
            expected = proofs.discharge_vc(vc, program).status
            solver = z3.Solver()
            solver.from_string(proofs.emit_smtlib(vc, program))
            got = str(solver.check())
            assert (expected == "valid") == (got == "unsat"), vc.provenance
