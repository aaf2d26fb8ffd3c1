"""Experiment kinds, their runners and one-line descriptions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .bilinear import bilinear_annulus, bilinear_ball
from .config import ExperimentConfig
from .evolution import conservation_experiment, smoothing_experiment
from .report import ExperimentReport
from .runners import randomize_run, simulate
from .strichartz import strichartz_loss_check, xsb_transfer_check
from .tails import khintchine_suite, tail_suite


@dataclass(frozen=True)
class Experiment:
    kind: str
    run: Callable[..., ExperimentReport]
    anchor: str
    description: str


EXPERIMENTS = {
    e.kind: e
    for e in [
        Experiment("simulate", simulate, "flow", "evolve one datum under the Hartree flow and save the trajectory"),
        Experiment("randomize", randomize_run, "wiener randomization", "draw one randomized datum and list its cube coefficients"),
        Experiment("mc-tail", lambda c, jobs=1: tail_suite(c, jobs=jobs), "large deviation bound",
                   "gaussian-type tails of randomized norms, before and after the linear flow"),
        Experiment("khintchine", lambda c, jobs=1: khintchine_suite(c, jobs=jobs), "khintchine inequality",
                   "sqrt(p) growth of L^p moments of random sums"),
        Experiment("bilinear-annulus", lambda c, jobs=1: bilinear_annulus(c, jobs=jobs), "annulus bilinear estimate",
                   "frequency exponents of the bilinear estimate for separated annuli"),
        Experiment("bilinear-ball", lambda c, jobs=1: bilinear_ball(c, jobs=jobs), "ball bilinear estimate",
                   "radius exponent of the bilinear estimate for a small ball against an annulus"),
        Experiment("strichartz", lambda c, jobs=1: strichartz_loss_check(c, jobs=jobs), "strichartz with loss",
                   "refinement stability of the derivative-loss Strichartz ratio"),
        Experiment("xsb-transfer", lambda c, jobs=1: xsb_transfer_check(c, jobs=jobs), "transfer principle",
                   "Strichartz and mass norms controlled by X^{s,b} norms"),
        Experiment("smoothing", lambda c, jobs=1: smoothing_experiment(c, jobs=jobs), "nonlinear smoothing",
                   "the Duhamel part stays bounded in H^sigma under refinement while the datum does not"),
        Experiment("conservation", lambda c, jobs=1: conservation_experiment(c, jobs=jobs), "conservation laws",
                   "mass and energy drift of the split-step scheme"),
    ]
}


def run(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    return EXPERIMENTS[config.kind].run(config, jobs=jobs)
