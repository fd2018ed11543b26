"""Sequential decoding simulator, exact branch trees and decoders."""

import json
import math

import numpy as np
import pytest

from byzmac import qmatrix as qm
from byzmac.channel import CqMacChannel, example_channel, example_povms
from byzmac.errors import LengthMismatch, SlotOutOfRange
from byzmac.simulator import (
    ABSTAIN,
    FixedSequence,
    Honest,
    RandomCode,
    Setup,
    WorstCaseSearch,
    error_probability,
    exact_errors,
    exact_errors_by_gamma,
    example_setup,
    paper_example_demo,
    path_count,
    pgm_code,
    pgm_decoder,
    rows_to_csv,
    run_episode,
    simulate,
    stage_distributions,
    summary_rows,
    worst_case_adversary,
)
from byzmac.states import DensityOperator, Povm, lueders_branch, outcome_probs

from helpers import random_mac


def noisy_setup(seed: int = 0, n: int = 2, order=(0, 1)) -> Setup:
    """Two senders on a random qubit channel with repetition codes, PGM decoders and cyclic shifts."""
    ch = random_mac(np.random.default_rng(seed), (2, 2), 2)
    perms = [tuple((i + s) % n for i in range(n)) for s in range(n)]
    words = {0: (0,) * (n - 1) + (1,), 1: (1,) * (n - 1) + (0,)}
    codes = {s: pgm_code(ch, s, words, perms) for s in (0, 1)}
    return Setup(ch, codes, order)


class TestPaperExample:
    def test_demo_all_cases(self):
        report = paper_example_demo()
        assert report.passed
        assert [r.case for r in report.rows] == ["1a", "1b", "1c", "2a", "2b", "2c"]

    def test_case_2c_exact(self):
        setup = example_setup((1, 0)).with_adversary(1, FixedSequence((2,)))
        assert exact_errors(setup)[0] == pytest.approx(0.5, abs=1e-12)
        dists = stage_distributions(setup, ((0,), (2,)))
        assert np.allclose(dists, 0.5, rtol=0, atol=1e-12)

    def test_case_1b_all_honest(self):
        assert exact_errors(example_setup((0, 1))) == {0: 0.0, 1: 0.0}

    @pytest.mark.parametrize("symbol", [0, 1])
    def test_case_1c_any_fixed_symbol(self, symbol):
        setup = example_setup((0, 1)).with_adversary(0, FixedSequence((symbol,)))
        assert exact_errors(setup)[1] == pytest.approx(0.0, abs=1e-12)

    def test_worst_case_order_12(self):
        res = worst_case_adversary(example_setup((0, 1)).with_adversary(1, WorstCaseSearch()))
        assert res.verified and res.candidates == 3
        assert res.per_sender[0][1] == pytest.approx(0.0, abs=1e-12)

    def test_worst_case_order_21(self):
        res = worst_case_adversary(example_setup((1, 0)).with_adversary(1, WorstCaseSearch()))
        seq, err = res.per_sender[0]
        assert seq == (2,) and err == pytest.approx(0.5, abs=1e-12)

    def test_episode_case_1b_always_correct(self):
        setup = example_setup((0, 1))
        rng = np.random.default_rng(1)
        for t in range(200):
            tr = run_episode(setup, rng, t)
            assert tr.correct == {0: True, 1: True}


class TestExactVersusManual:
    def test_identity_permutation_equals_sequential_measurement(self):
        # branch tree of the simulator versus explicit Lueders updates
        setup = example_setup((1, 0)).with_adversary(1, FixedSequence((2,)))
        d1, d2 = example_povms()
        success = 0.0
        for m in (0, 1):
            rho = example_channel().apply((m, 2))
            for e2 in d2.elements:
                p2 = float(np.real(np.trace(e2 @ rho.mat)))
                if p2 <= 1e-12:
                    continue
                _, post = lueders_branch(e2, rho)
                success += 0.5 * p2 * outcome_probs(d1, post)[m]
        assert exact_errors_by_gamma(setup, (2,))[(0, 0)][0] == pytest.approx(1 - success, abs=1e-12)

    def test_permuted_code_equals_conjugated_povm(self):
        setup = noisy_setup(3, n=3)
        ch = setup.channel
        gamma = 1
        perm = setup.codes[0].permutations[gamma]
        # the same code seen through gamma: pre-permuted codewords and a conjugated POVM
        codes = {}
        for s, code in setup.codes.items():
            p = code.permutations[gamma]
            words = {m: tuple(w[i] for i in p) for m, w in code.codewords.items()}
            povm = Povm(tuple(qm.permute_factors(e, ch.out_dim, 3, p) for e in code.base_povm.elements),
                        code.base_povm.labels)
            codes[s] = RandomCode(s, words, [tuple(range(3))], povm)
        twin = Setup(ch, codes, setup.order)
        assert perm != (0, 1, 2)
        got = exact_errors_by_gamma(setup)[(gamma, gamma)]
        want = exact_errors_by_gamma(twin)[(0, 0)]
        for s in (0, 1):
            assert got[s] == pytest.approx(want[s], abs=1e-12)

    def test_single_message_code_never_errs(self):
        ch = random_mac(np.random.default_rng(4), (2, 2), 2)
        code0 = RandomCode(0, {0: (1,)}, [(0,)], Povm((np.eye(2),), (0,)))
        code1 = pgm_code(ch, 1, {0: (0,), 1: (1,)})
        setup = Setup(ch, {0: code0, 1: code1}, (0, 1))
        assert exact_errors(setup)[0] == 0.0
        est = error_probability(setup, 500, seed=1)
        assert est[0].errors == 0

    def test_single_symbol_adversary(self):
        ch = CqMacChannel([(0, 1), ("z",)], {(0, "z"): DensityOperator.basis(0, 2), (1, "z"): DensityOperator.basis(1, 2)})
        codes = {0: pgm_code(ch, 0, {0: (0,), 1: (1,)}), 1: RandomCode(1, {0: ("z",)}, [(0,)], Povm((np.eye(2),), (0,)))}
        res = worst_case_adversary(Setup(ch, codes, (0, 1)).with_adversary(1, WorstCaseSearch()))
        assert res.worst_sequence == ("z",) and res.per_sender[0][1] == pytest.approx(0.0, abs=1e-12)

    def test_gamma_aware_at_least_oblivious(self):
        setup = noisy_setup(5).with_adversary(1, WorstCaseSearch())
        obl = worst_case_adversary(setup)
        aware = worst_case_adversary(setup, gamma_aware=True)
        assert aware.per_sender[0][1] >= obl.per_sender[0][1] - 1e-12
        assert obl.verified and aware.gamma_aware

    def test_path_count(self):
        # 2 perms * 2 messages * 3 outcomes per sender
        assert path_count(noisy_setup(6)) == 144


class TestMonteCarlo:
    def test_case_2c_within_three_sigma(self):
        setup = example_setup((1, 0)).with_adversary(1, FixedSequence((2,)))
        est = error_probability(setup, 20_000, seed=3)[0]
        assert est.exact == pytest.approx(0.5)
        assert est.within_3sigma()
        assert est.ci_low <= 0.5 <= est.ci_high

    def test_noisy_fixture_within_three_sigma(self):
        setup = noisy_setup(7)
        for est in error_probability(setup, 20_000, seed=4).values():
            assert est.exact is not None and est.within_3sigma()

    def test_reproducible_transcripts(self):
        setup = noisy_setup(8)
        a = [t.to_json() for t in simulate(setup, 300, seed=9)]
        b = [t.to_json() for t in simulate(setup, 300, seed=9)]
        assert a == b
        assert a != [t.to_json() for t in simulate(setup, 300, seed=10)]

    def test_threads_do_not_change_results(self, monkeypatch):
        setup = noisy_setup(9)
        serial = [t.to_json() for t in simulate(setup, 400, seed=2)]
        monkeypatch.setenv("BYZMAC_THREADS", "4")
        threaded = [t.to_json() for t in simulate(setup, 400, seed=2)]
        assert serial == threaded

    def test_csv_byte_identical(self):
        setup = example_setup((1, 0)).with_adversary(1, FixedSequence((2,)))
        texts = [rows_to_csv(summary_rows(setup, error_probability(setup, 2000, seed=5), 5)) for _ in range(2)]
        assert texts[0] == texts[1]
        assert texts[0].splitlines()[0] == "order,adversary_slot,strategy,sender,err_exact,err_mc,ci_low,ci_high,trials,seed"

    def test_transcript_structure(self):
        setup = noisy_setup(10).with_adversary(1, FixedSequence((0, 1)))
        tr = run_episode(setup, np.random.default_rng(0))
        assert len(tr.stages) == 2
        assert all(0 <= r.prob <= 1 for r in tr.stages)
        data = json.loads(tr.to_json())
        assert data["adversary_slot"] == 2 and set(data["correct"]) == {"1"}

    def test_worst_case_strategy_in_simulation(self):
        setup = example_setup((1, 0)).with_adversary(1, WorstCaseSearch())
        est = error_probability(setup, 4000, seed=1)[0]
        assert abs(est.estimate - 0.5) <= 3 * math.sqrt(0.25 / 4000)

    def test_honest_strategy_is_not_adversarial(self):
        setup = example_setup((0, 1)).with_adversary(1, Honest())
        assert setup.adversary_slot is None
        assert set(error_probability(setup, 100).keys()) == {0, 1}

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            simulate(example_setup((0, 1)), 0)


class TestSetupValidation:
    def test_mismatched_block_lengths(self):
        ch = example_channel()
        d1, d2 = example_povms()
        c0 = RandomCode(0, {0: (0,), 1: (1,)}, [(0,)], d1)
        c1 = pgm_code(ch, 1, {0: (0, 0), 1: (1, 1)})
        with pytest.raises(LengthMismatch):
            Setup(ch, {0: c0, 1: c1}, (0, 1))

    def test_adversary_sequence_length(self):
        with pytest.raises(LengthMismatch):
            example_setup((0, 1)).with_adversary(1, FixedSequence((0, 1)))

    def test_bad_order(self):
        with pytest.raises(SlotOutOfRange):
            example_setup((0, 0))

    def test_codewords_same_length(self):
        with pytest.raises(LengthMismatch):
            RandomCode(0, {0: (0,), 1: (1, 1)}, None, example_povms()[0])


class TestPgm:
    def test_orthogonal_states_give_projectors(self):
        states = [DensityOperator.basis(i, 3) for i in range(3)]
        p = pgm_decoder(states)
        for i, e in enumerate(p.elements[:3]):
            assert qm.max_abs(e - states[i].mat) <= 1e-12
        assert qm.max_abs(p.element(ABSTAIN)) <= 1e-12

    def test_single_state(self):
        rho = DensityOperator(np.diag([0.5, 0.5, 0.0]))
        p = pgm_decoder([rho])
        assert qm.max_abs(p.elements[0] - np.diag([1, 1, 0])) <= 1e-12
        assert qm.max_abs(p.element(ABSTAIN) - np.diag([0, 0, 1])) <= 1e-12

    def test_two_pure_states_against_gram_oracle(self):
        # |<phi|psi>|^2 = 1/2; the PGM success for pure states is the mean squared diagonal of sqrt(Gram)
        phi = np.array([1.0, 0.0])
        psi = np.array([1.0, 1.0]) / math.sqrt(2)
        p = pgm_decoder([DensityOperator.pure(phi), DensityOperator.pure(psi)])
        success = 0.5 * (np.real(phi @ p.elements[0] @ phi) + np.real(psi @ p.elements[1] @ psi))
        s = abs(phi @ psi)
        # closed-form 2x2 eigen-solve of the Gram matrix [[1, s], [s, 1]]
        l_plus, l_minus = 1 + s, 1 - s
        sqrt_diag = (math.sqrt(l_plus) + math.sqrt(l_minus)) / 2
        assert success == pytest.approx(sqrt_diag**2, abs=1e-12)
        assert success == pytest.approx((1 + math.sqrt(0.5)) / 2, abs=1e-12)

    def test_random_ensembles_valid(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            ch = random_mac(rng, (3,), int(rng.integers(2, 5)))
            p = pgm_decoder([ch.apply((x,)) for x in range(3)], priors=rng.dirichlet(np.ones(3)))
            assert p.completeness_error() <= 1e-9
            assert p.labels[-1] == ABSTAIN

    def test_bad_priors(self):
        with pytest.raises(ValueError):
            pgm_decoder([DensityOperator.basis(0, 2)], priors=[0.5])
