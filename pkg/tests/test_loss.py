"""Loss functional tests: allocation shares, hand-checked paths, genericity."""

import numpy as np
import pytest

from covloss import (
    ClearingSetup,
    FactorModel,
    LossSpec,
    LossVector,
    MarginSpec,
    MemberSpec,
    MemberUniverse,
    RngStream,
    ScenarioBatch,
    allocation_coefficient,
    compute_cover2_and_df,
    generic_loss,
    member_loss,
    sample_batch,
)

BETAS = np.array([1.0, 2.0, 3.0])
ZEROS = np.zeros(3)


def crafted_setup():
    """Four-member stack (reference + 3) with easy collateral numbers."""
    return ClearingSetup(
        im=np.array([1.0, 1.0, 1.0, 1.0]),
        sloim=np.array([1.0, 1.0, 1.0, 1.0]),
        df=np.array([1.0, 2.0, 0.5, 1.5]),
        cover2=5.0,
        thresholds=np.array([0.0, 0.1, -0.2, 0.3]),
        gamma=0.1,
    )


class TestAllocationCoefficient:
    def test_survivor_gets_zero(self):
        assert allocation_coefficient(0, [-1.0, -1.0, -1.0], BETAS, ZEROS) == 0.0

    def test_sole_survivorless_default_gets_full_unit(self):
        # everyone defaulted: nothing to share the unit with
        assert allocation_coefficient(1, [1.0, 1.0, 1.0], BETAS, ZEROS) == 1.0

    def test_share_against_surviving_fund_units(self):
        # member 0 defaults, members 1 and 2 survive: 1 / (1 + 2 + 3)
        assert allocation_coefficient(0, [1.0, -1.0, -1.0], BETAS, ZEROS) == pytest.approx(
            1.0 / 6.0, rel=1e-15
        )

    def test_threshold_equality_counts_as_default(self):
        assert allocation_coefficient(0, [0.0, -1.0, -1.0], BETAS, ZEROS) > 0.0

    def test_batched_input(self):
        x = np.array([[1.0, -1.0, -1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]])
        out = allocation_coefficient(0, x, BETAS, ZEROS)
        np.testing.assert_allclose(out, [1.0 / 6.0, 1.0, 0.0], rtol=1e-15)

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((500, 3))
        for i in range(3):
            out = allocation_coefficient(i, x, BETAS, ZEROS)
            assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_nondecreasing_in_every_coordinate(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((200, 3))
        for i in range(3):
            base = allocation_coefficient(i, x, BETAS, ZEROS)
            for j in range(3):
                bumped = x.copy()
                bumped[:, j] += 1.5
                assert np.all(allocation_coefficient(i, bumped, BETAS, ZEROS) >= base)

    def test_input_validation(self):
        with pytest.raises(ValueError, match="nonnegative"):
            allocation_coefficient(0, [1.0, 1.0], np.array([1.0, -1.0]), np.zeros(2))
        with pytest.raises(ValueError, match="equal length"):
            allocation_coefficient(0, [1.0, 1.0], np.ones(2), np.zeros(3))
        with pytest.raises(IndexError):
            allocation_coefficient(5, [1.0, 1.0], np.ones(2), np.zeros(2))
        with pytest.raises(ValueError, match="coordinates"):
            allocation_coefficient(0, [1.0, 1.0, 1.0], np.ones(2), np.zeros(2))


class TestMemberLoss:
    def test_hand_checked_paths(self):
        setup = crafted_setup()
        collateral = setup.collateral[1:]  # (3.0, 1.5, 2.5) against thresholds (0.1, -0.2, 0.3)
        x = np.array(
            [
                [-1.0, 0.1, -1.0, 0.0],   # only member 1 defaults (boundary hit)
                [-1.0, 5.0, 5.0, 5.0],    # all three default
                [-1.0, -5.0, -5.0, -5.0], # nobody defaults
            ]
        )
        y = np.array(
            [
                [collateral[0] + 10.0, 0.0, 0.0],
                [collateral[0] + 6.0, collateral[1] + 3.0, collateral[2] - 5.0],
                [collateral[0] + 50.0, 0.0, 0.0],
            ]
        )
        batch = ScenarioBatch(x=x, y=y, mixing_k=np.ones(3))
        loss = member_loss(batch, setup)
        # path 0: one defaulted unit shares with survivors' fund units 0.5 + 1.5
        assert loss.total[0] == pytest.approx(10.0 / 3.0, rel=1e-15)
        # path 1: no survivors, shortfalls (6, 3, 0) borne one-for-one
        assert loss.total[1] == pytest.approx(9.0, rel=1e-15)
        # path 2: big exposure move but nobody defaulted
        assert loss.total[2] == 0.0

    def test_reference_column_ignored(self):
        setup = crafted_setup()
        x = np.array([[-1.0, 1.0, -1.0, -1.0]])
        y = np.array([[10.0, 0.0, 0.0]])
        alive = member_loss(ScenarioBatch(x=x, y=y, mixing_k=np.ones(1)), setup)
        x_dead = x.copy()
        x_dead[0, 0] = 50.0  # reference deep in default
        dead = member_loss(ScenarioBatch(x=x_dead, y=y, mixing_k=np.ones(1)), setup)
        assert alive.total[0] == dead.total[0] > 0.0

    def test_contributions_sum_to_total(self):
        u = MemberUniverse(
            members=(
                MemberSpec(id=0, lam=0.05, nom=-30.0, sigma=0.3),
                MemberSpec(id=1, lam=0.05, nom=20.0, sigma=0.3),
                MemberSpec(id=2, lam=0.05, nom=10.0, sigma=0.3),
            )
        )
        model = FactorModel(rho_cr=0.4, rho_mkt=0.4, rho_wwr=0.3, nu=5.0)
        setup = compute_cover2_and_df(u, MarginSpec(), model)
        batch = sample_batch(model, u, 2000, RngStream(seed=21))
        loss = member_loss(batch, setup, keep_contributions=True)
        assert loss.contributions.shape == (2000, 2)
        np.testing.assert_array_equal(loss.contributions.sum(axis=1), loss.total)
        assert np.all(loss.total >= 0.0)

    def test_pathwise_monotone_in_latent_credit(self):
        setup = crafted_setup()
        rng = np.random.default_rng(9)
        x = rng.standard_normal((300, 4))
        y = np.abs(rng.standard_normal((300, 3))) * 5.0
        base = member_loss(ScenarioBatch(x=x, y=y, mixing_k=np.ones(300)), setup)
        for j in range(1, 4):
            bumped = x.copy()
            bumped[:, j] += 2.0
            more = member_loss(ScenarioBatch(x=bumped, y=y, mixing_k=np.ones(300)), setup)
            assert np.all(more.total >= base.total)

    def test_setup_batch_mismatch(self):
        setup = crafted_setup()
        batch = ScenarioBatch(x=np.zeros((2, 3)), y=np.zeros((2, 2)), mixing_k=np.ones(2))
        with pytest.raises(ValueError, match="covers 4 members"):
            member_loss(batch, setup)

    def test_unfunded_reference_rejected(self):
        setup = ClearingSetup(
            im=np.ones(3),
            sloim=np.array([0.0, 1.0, 1.0]),
            df=np.array([0.0, 1.0, 1.0]),
            cover2=2.0,
            thresholds=np.zeros(3),
            gamma=0.1,
        )
        batch = ScenarioBatch(x=np.zeros((1, 3)), y=np.zeros((1, 2)), mixing_k=np.ones(1))
        with pytest.raises(ValueError, match="zero default fund"):
            member_loss(batch, setup)


class TestGenericLoss:
    def test_reproduces_direct_evaluation_bitwise(self):
        u = MemberUniverse(
            members=(
                MemberSpec(id=0, lam=0.05, nom=-30.0, sigma=0.3),
                MemberSpec(id=1, lam=0.05, nom=20.0, sigma=0.3),
                MemberSpec(id=2, lam=0.05, nom=10.0, sigma=0.3),
            )
        )
        model = FactorModel(rho_cr=0.4, rho_mkt=0.4, rho_wwr=0.3, nu=5.0)
        setup = compute_cover2_and_df(u, MarginSpec(), model)
        batch = sample_batch(model, u, 5000, RngStream(seed=22))
        spec = LossSpec.ccp(setup.betas, setup.thresholds[1:], setup.collateral[1:])
        direct = member_loss(batch, setup, keep_contributions=True)
        generic = generic_loss(batch, spec, keep_contributions=True)
        np.testing.assert_array_equal(generic.total, direct.total)
        np.testing.assert_array_equal(generic.contributions, direct.contributions)

    def test_trivial_allocation_sums_positive_parts(self):
        spec = LossSpec(
            n=2,
            allocation=lambda x: np.ones_like(x),
            severity=lambda y: np.maximum(y, 0.0),
        )
        batch = ScenarioBatch(
            x=np.zeros((2, 3)),
            y=np.array([[1.0, -2.0], [3.0, 4.0]]),
            mixing_k=np.ones(2),
        )
        loss = generic_loss(batch, spec)
        np.testing.assert_allclose(loss.total, [1.0, 7.0], rtol=0)

    def test_spec_size_mismatch(self):
        spec = LossSpec.ccp(np.ones(3), np.zeros(3), np.ones(3))
        batch = ScenarioBatch(x=np.zeros((1, 3)), y=np.zeros((1, 2)), mixing_k=np.ones(1))
        with pytest.raises(ValueError, match="covers 3 members"):
            generic_loss(batch, spec)

    def test_misshapen_allocation_rejected(self):
        spec = LossSpec(
            n=2,
            allocation=lambda x: np.ones((x.shape[0],)),  # wrong: drops member axis
            severity=lambda y: np.maximum(y, 0.0),
        )
        batch = ScenarioBatch(x=np.zeros((4, 3)), y=np.zeros((4, 2)), mixing_k=np.ones(4))
        with pytest.raises(ValueError, match="allocation returned shape"):
            generic_loss(batch, spec)

    def test_ccp_spec_validates_inputs(self):
        with pytest.raises(ValueError, match="nonnegative"):
            LossSpec.ccp(np.array([1.0, -1.0]), np.zeros(2), np.ones(2))
        with pytest.raises(ValueError, match="equal-length"):
            LossSpec.ccp(np.ones(2), np.zeros(3), np.ones(2))


class TestLossVector:
    def test_rejects_negative_losses(self):
        with pytest.raises(ValueError, match="nonnegative"):
            LossVector(total=np.array([1.0, -0.5]))

    def test_rejects_misaligned_contributions(self):
        with pytest.raises(ValueError, match="misaligned"):
            LossVector(total=np.zeros(2), contributions=np.zeros((3, 1)))

    def test_read_only(self):
        lv = LossVector(total=np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            lv.total[0] = 5.0
        assert lv.n_paths == 2
