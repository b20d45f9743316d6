#!/usr/bin/env python
# -*- coding: utf-8 -*-
#-----------------------------------------------------------------------------
# Copyright (c) 2015-2023, IBM Corp.
# All rights reserved.
#
# Distributed under the terms of the BSD Simplified License.
#
# The full license is in the LICENSE file, distributed with this software.
#-----------------------------------------------------------------------------

"""
Metropolis-Hastings proposal kernels over partitions.

Two families are provided.

Split-merge kernels (``sm`` and ``bsm``) pick observations i and j, build
a launch state with i and j in separate blocks, thermalize it with L
restricted sweeps and either split the common block of i and j or merge
their two blocks. ``bsm`` initializes the launch state from the coarsest
common refinement of two past states instead of at random.

Reconfiguration kernels (``srm``, ``sarm`` and ``arm``) let observations
flow between the blocks of i and j and the rest of the partition. Each
observation is updated once, observations outside the blocks of i and j
may only stay or enter those blocks, and the last original member of a
block that received a newcomer may not leave it. Under these rules every
final partition is reached by exactly one sequence of choices, so the
product of the realized sweep probabilities is the proposal probability.
``sarm`` seeds i and j with their refinement blocks, ``arm`` additionally
moves the remaining refinement blocks jointly before the per-observation
pass. The reverse probability is obtained by :func:`forced_log_proposal`,
a replay of the same kernel from the proposed state forced towards the
current one.

Every kernel takes an ``order`` argument, a permutation of the
observations. Whenever a kernel iterates "in ascending order" it follows
this permutation, which is how random relabeling of the observations is
applied without permuting any data.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from dparm.exceptions import KernelError
from dparm.models import NEW, SufficientStats
from dparm.partitions import (Partition, co_clustered, coarsest_common_refinement,
                              restrict)
from dparm.sweeps import (as_chooser, forced_sweep, full_sweep_step,
                          restricted_sweep)

logger = logging.getLogger(__name__)

KERNELS = ('sm', 'bsm', 'srm', 'sarm', 'arm')
ADAPTIVE = ('bsm', 'sarm', 'arm')
RECONFIGURATION = ('srm', 'sarm', 'arm')

SPLIT = 'split'
MERGE = 'merge'

_HALF = np.array([0.5, 0.5])
_REPLAY_LIMIT = 100000


#-----------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class ProposalContext:
    """
    Background information of one kernel call.

    Attributes
    ----------
    i, j : int
        Distinct observations.
    za, zb : Partition, optional
        Past states with ``za_i = za_j`` and ``zb_i != zb_j``. Required by
        the adaptive kernels.

    Raises
    ------
    KernelError
        If i equals j or the past states do not satisfy the orientation.
    """
    i: int
    j: int
    za: Optional[Partition] = None
    zb: Optional[Partition] = None

    def __post_init__(self):
        if self.i == self.j:
            raise KernelError("i and j must be distinct")
        if (self.za is None) != (self.zb is None):
            raise KernelError("za and zb must be given together")
        if self.za is not None:
            if not co_clustered(self.za, self.i, self.j):
                raise KernelError("za must hold i and j in the same block")
            if co_clustered(self.zb, self.i, self.j) or self.zb.labels[self.i] < 0:
                raise KernelError("zb must hold i and j in different blocks")

    @classmethod
    def oriented(cls, i: int, j: int, first: Partition, second: Partition):
        """
        Build a context from two past states in either order, swapping
        them so that the merged view comes first.
        """
        if co_clustered(first, i, j) and not co_clustered(second, i, j):
            return cls(i, j, first, second)
        if co_clustered(second, i, j) and not co_clustered(first, i, j):
            return cls(i, j, second, first)
        raise KernelError("the two states agree on the pair (%s, %s)" % (i, j))

    @property
    def adaptive(self):
        return self.za is not None


@dataclass
class MoveOutcome:
    """
    Result of one proposal.

    Attributes
    ----------
    partition : Partition
        The proposed state z*.
    kind : str
        ``'split'`` when i and j shared a block in the current state,
        ``'merge'`` otherwise.
    log_t_fwd, log_t_rev : float
        log T(z* | z) and log T(z | z*). The reverse term is -inf when z
        cannot be reached from z*, and NaN when it was not computed.
    log_q_old, log_q_new : float
        log q(z) and log q(z*).
    choices : tuple of int
        Indices taken at every categorical decision, launch included.
    accept_prob : float
        Filled by :func:`accept_move`.
    accepted : bool
    state : SufficientStats
        Working statistics of z*.
    """
    partition: Partition
    kind: str
    log_t_fwd: float
    log_t_rev: float
    log_q_old: float
    log_q_new: float
    choices: Tuple[int, ...] = ()
    accept_prob: float = float('nan')
    accepted: bool = False
    state: Optional[SufficientStats] = field(default=None, repr=False)


class _Recording(object):
    def __init__(self, chooser):
        self.chooser = chooser
        self.taken = []

    def choose(self, probs, step=None):
        k = self.chooser.choose(probs, step)
        self.taken.append(k)
        return k


#-----------------------------------------------------------------------------
# Accept step

def accept_probability(log_q_old, log_q_new, log_t_fwd, log_t_rev):
    """
    ``min[1, T(z|z*) q(z*) / (T(z*|z) q(z))]``.

    Raises
    ------
    KernelError
        If an input is NaN, +inf, or log_q_old or log_t_fwd is -inf.
    """
    values = np.array([log_q_old, log_q_new, log_t_fwd, log_t_rev], dtype=float)
    if np.isnan(values).any() or np.isposinf(values).any():
        raise KernelError("acceptance inputs must not be NaN or +inf: %s" % values.tolist())
    if np.isneginf(log_q_old) or np.isneginf(log_t_fwd):
        raise KernelError("the current state and the forward path must have positive probability")
    if np.isneginf(log_q_new) or np.isneginf(log_t_rev):
        return 0.0
    log_ratio = log_t_rev - log_t_fwd + log_q_new - log_q_old
    return 1.0 if log_ratio >= 0 else float(np.exp(log_ratio))

def mh_accept(log_q_old, log_q_new, log_t_fwd, log_t_rev, rng):
    """
    Metropolis-Hastings decision. Draws one uniform number from ``rng``
    and accepts with :func:`accept_probability`.

    Examples
    --------
    >>> mh_accept(0.0, 0.0, -1.0, -1.0, np.random.default_rng(0))
    True
    """
    p = accept_probability(log_q_old, log_q_new, log_t_fwd, log_t_rev)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return bool(rng.random() < p)

def accept_move(outcome: MoveOutcome, rng):
    """Apply :func:`mh_accept` to an outcome and record the decision."""
    outcome.accept_prob = accept_probability(outcome.log_q_old, outcome.log_q_new,
                                             outcome.log_t_fwd, outcome.log_t_rev)
    outcome.accepted = mh_accept(outcome.log_q_old, outcome.log_q_new,
                                 outcome.log_t_fwd, outcome.log_t_rev, rng)
    return outcome.accepted


#-----------------------------------------------------------------------------
# Helpers

def _ranks(order, n):
    rank = np.arange(n)
    if order is not None:
        order = np.asarray(order, dtype=np.intp)
        if len(order) != n or not np.array_equal(np.sort(order), np.arange(n)):
            raise KernelError("order must be a permutation of range(%s)" % n)
        rank[order] = np.arange(n)
    return rank

def iteration_order(blocks, order: Sequence[int]=None):
    """
    Order blocks by descending size, ties broken by ascending first
    element A(1). With ``order``, elements compare by their position in
    that permutation and each block is returned with its elements in that
    order, so that ``block[0]`` is A(1).

    Examples
    --------
    >>> iteration_order([{3}, {1, 2}])
    [(1, 2), (3,)]
    >>> iteration_order([{9}, {4}, {7}])
    [(4,), (7,), (9,)]
    """
    blocks = [list(block) for block in blocks]
    if order is None:
        key = lambda x: x
    else:
        rank = _ranks(order, len(order))
        key = lambda x: rank[x]
    blocks = [tuple(sorted(block, key=key)) for block in blocks]
    return sorted(blocks, key=lambda block: (-len(block), key(block[0])))

def _as_stats(model, z):
    if isinstance(z, Partition):
        return model.new_stats(z)
    if isinstance(z, SufficientStats):
        return z
    raise TypeError("z should be a Partition or SufficientStats")

def _check_pair(stats, i, j):
    if i == j:
        raise KernelError("i and j must be distinct")
    for x in (i, j):
        if not 0 <= x < stats.n or stats.label_of(x) < 0:
            raise KernelError("observation %s is not covered by the partition" % x)

def _check_context(stats, ctx, adaptive):
    _check_pair(stats, ctx.i, ctx.j)
    if adaptive:
        if not ctx.adaptive:
            raise KernelError("this kernel needs past states za and zb")
        for past in (ctx.za, ctx.zb):
            if past.n != stats.n or not past.is_full():
                raise KernelError("past states must partition all %s observations" % stats.n)

def _outcome(stats, state, kind, log_t_fwd, log_t_rev, choices):
    return MoveOutcome(partition=state.partition(), kind=kind,
                       log_t_fwd=float(log_t_fwd), log_t_rev=float(log_t_rev),
                       log_q_old=stats.log_joint(), log_q_new=state.log_joint(),
                       choices=tuple(choices), state=state)


#-----------------------------------------------------------------------------
# Split-merge kernels

def _split_merge(model, stats, i, j, launch, L, chooser, rank):
    li0, lj0 = stats.label_of(i), stats.label_of(j)
    split = li0 == lj0
    zi = stats.block(li0)
    zj = stats.block(lj0)
    union = sorted(set(zi) | set(zj), key=lambda x: rank[x])
    S = [h for h in union if h != i and h != j]

    work = stats.copy()
    work.remove(zi)
    if not split:
        work.remove(zj)
    li, lj = launch(work, S)

    for _ in range(L):
        for h in S:
            restricted_sweep(model, work, [h], [li, lj], chooser)

    if split:
        log_t_fwd = 0.0
        for h in S:
            log_t_fwd += restricted_sweep(model, work, [h], [li, lj], chooser).log_prob
        return work, SPLIT, log_t_fwd, 0.0

    log_t_rev = 0.0
    members_i = set(zi)
    for h in S:
        log_t_rev += forced_sweep(model, work, [h], [li, lj], 0 if h in members_i else 1).log_prob
    state = stats.copy()
    state.remove(zj)
    state.add(zj, li0)
    return state, MERGE, 0.0, log_t_rev

def sm_propose(model, z, i: int, j: int, L: int=5, rng=None, order: Sequence[int]=None):
    """
    Split-merge proposal with a random launch state.

    The blocks of i and j are removed, i and j are placed in two new
    blocks and every other member S of the removed blocks is assigned to
    one of them with probability one half. L restricted sweeps over S
    between the two blocks follow. A split runs one more sweep and
    multiplies its probabilities into T(z*|z); a merge forces one sweep
    towards z and multiplies them into T(z|z*).

    Parameters
    ----------
    model : ConjugateModel
    z : Partition or SufficientStats
        Current state, left unchanged.
    i, j : int
        Distinct covered observations.
    L : int, default: 5
        Number of intermediate restricted sweeps.
    rng : numpy.random.Generator or chooser
    order : sequence of int, optional
        Visiting order of S.

    Returns
    -------
    MoveOutcome

    Raises
    ------
    KernelError
        If i equals j or one of them is not covered.
    """
    stats = _as_stats(model, z)
    _check_pair(stats, i, j)
    if L < 0:
        raise KernelError("L must be non-negative")
    chooser = _Recording(as_chooser(rng))
    rank = _ranks(order, stats.n)

    def launch(work, S):
        li = work.add([i])
        lj = work.add([j])
        for h in S:
            work.add([h], (li, lj)[chooser.choose(_HALF)])
        return li, lj

    state, kind, log_t_fwd, log_t_rev = _split_merge(model, stats, i, j, launch, L, chooser, rank)
    return _outcome(stats, state, kind, log_t_fwd, log_t_rev, chooser.taken)

def launch_refinement(ctx: ProposalContext, union):
    """
    Refinement ``za v zb`` restricted to ``union``, the common launch
    partition of both directions of a ``bsm`` move.
    """
    return coarsest_common_refinement(restrict(ctx.za, union), restrict(ctx.zb, union))

def bsm_propose(model, z, ctx: ProposalContext, L: int=5, rng=None,
                order: Sequence[int]=None):
    """
    Split-merge proposal whose launch state is seeded from past states.

    The launch puts the refinement block of i and the refinement block of
    j in the two new blocks; the rest of S is placed by one restricted
    sweep. The refinement is computed on the union of the blocks of i and
    j, on which z itself is a single block in the merged view, so the
    split and the merge direction of the same pair build the same launch.
    Everything else follows :func:`sm_propose`.
    """
    stats = _as_stats(model, z)
    _check_context(stats, ctx, adaptive=True)
    if L < 0:
        raise KernelError("L must be non-negative")
    i, j = ctx.i, ctx.j
    chooser = _Recording(as_chooser(rng))
    rank = _ranks(order, stats.n)

    def launch(work, S):
        union = set(S) | {i, j}
        c = launch_refinement(ctx, union)
        ci, cj = c.blocks[c.labels[i]], c.blocks[c.labels[j]]
        li = work.add(ci)
        lj = work.add(cj)
        seeded = set(ci) | set(cj)
        for h in S:
            if h not in seeded:
                restricted_sweep(model, work, [h], [li, lj], chooser)
        return li, lj

    state, kind, log_t_fwd, log_t_rev = _split_merge(model, stats, i, j, launch, L, chooser, rank)
    return _outcome(stats, state, kind, log_t_fwd, log_t_rev, chooser.taken)


#-----------------------------------------------------------------------------
# Reconfiguration kernels

@dataclass
class ReconfigurationProgress:
    """
    Bookkeeping of a reconfiguration pass, visible to choosers.

    Attributes
    ----------
    lead : int
        First element of the set being placed; it never moves again.
    locked : set
        Observations that will not move again.
    pending : set
        Observations of the blocks of i and j that still get an update.
    home : int, optional
        Label of the block an outside lead starts from, None for the
        members of the blocks of i and j.
    """
    lead: int
    locked: set
    pending: set
    home: Optional[int] = None


def seed_refinement(kind: str, stats: SufficientStats, ctx: ProposalContext):
    """
    Partition of the blocks of i and j used to seed a reconfiguration
    move: singletons of i and j for ``srm``, the coarsest common
    refinement of za, zb and the current state otherwise.
    """
    li, lj = stats.label_of(ctx.i), stats.label_of(ctx.j)
    union = stats.members[li] | stats.members[lj]
    if kind == 'srm':
        return Partition([(ctx.i,), (ctx.j,)], n=stats.n, check=False)
    current = Partition([stats.block(li)] + ([stats.block(lj)] if lj != li else []),
                        n=stats.n, check=False)
    return coarsest_common_refinement(current, restrict(ctx.za, union), restrict(ctx.zb, union))

def _reconfigure(kind, model, stats, ctx, chooser, rank):
    i, j = ctx.i, ctx.j
    li0, lj0 = stats.label_of(i), stats.label_of(j)
    split = li0 == lj0
    union = stats.members[li0] | stats.members[lj0]
    c = seed_refinement(kind, stats, ctx)
    ci, cj = c.blocks[c.labels[i]], c.blocks[c.labels[j]]

    work = stats.copy()
    work.remove(stats.block(li0))
    if not split:
        work.remove(stats.block(lj0))
    if split:
        work.add(ci)
        work.add(cj)
    else:
        work.add(sorted(ci + cj))

    visit = np.argsort(rank, kind='stable')
    moves = []
    if kind == 'arm':
        moves = iteration_order([b for b in c.blocks if i not in b and j not in b], visit)
    earmarks = set(a[0] for a in moves)
    progress = ReconfigurationProgress(lead=i, locked={i, j}, pending=set(union) - {i, j})

    log_t = 0.0
    for a in moves:
        progress.lead = a[0]
        progress.home = None
        progress.pending.discard(a[0])
        log_t += full_sweep_step(model, work, a, chooser, progress).log_prob
        progress.locked.add(a[0])

    original = stats.labels
    for h in visit.tolist():
        if h == i or h == j or h in earmarks:
            continue
        progress.lead = h
        progress.pending.discard(h)
        progress.home = None
        if h in union:
            result = full_sweep_step(model, work, [h], chooser, progress)
        else:
            own = work.label_of(h)
            progress.home = own
            members = work.members[own]
            originals = sum(1 for x in members if original[x] == original[h])
            if originals == 1 and len(members) >= 2:
                candidates = [own]
            elif split:
                candidates = [work.label_of(i), work.label_of(j), own]
            else:
                candidates = [work.label_of(j), own]
            result = restricted_sweep(model, work, [h], candidates, chooser, progress)
        log_t += result.log_prob
        progress.locked.add(h)
    return work, (SPLIT if split else MERGE), log_t


class _DeadEnd(Exception):
    pass


class ForcedPolicy(object):
    """
    Chooser that steers a reconfiguration pass towards a target partition.

    At every decision it keeps the candidates from which the target is
    still reachable: the lead of the moving set never moves again, so it
    must join the block holding its locked target mates, or an untouched
    block it shares a target block with, or a new block that the rest of
    its target block can still enter. The first admissible candidate is
    taken and the others are recorded for backtracking.

    Parameters
    ----------
    target : Partition
    script : sequence of int
        Indices to take at the first decisions, for backtracking.
    """
    def __init__(self, target: Partition, script: Sequence[int]=()):
        self.target = target.labels
        self.script = list(script)
        self.taken = []
        self.branches = []

    def _admissible(self, step, probs, k):
        if probs[k] <= 0:
            return False
        progress = step.extra
        goal = self.target[progress.lead]
        if goal < 0:
            return False
        block = set(np.flatnonzero(self.target == goal).tolist())
        moving = set(step.C.tolist())
        locked_mates = (block & progress.locked) - moving
        t = step.candidates[k]
        if t == NEW:
            return not locked_mates and block <= (moving | progress.pending)
        members = step.stats.members[t]
        locked_members = members & progress.locked
        if locked_members:
            return locked_members <= block and locked_mates <= members
        if t == progress.home:
            # the other original members may still leave
            return not locked_mates
        return not locked_mates and not members.isdisjoint(block)

    def choose(self, probs, step=None):
        position = len(self.taken)
        if position < len(self.script):
            k = self.script[position]
        else:
            admissible = [k for k in range(len(probs)) if self._admissible(step, probs, k)]
            if not admissible:
                raise _DeadEnd()
            k = admissible[0]
            if len(admissible) > 1:
                self.branches.append((position, admissible[1:]))
        self.taken.append(k)
        return k


def forced_log_proposal(kernel: str, model, z, target: Partition, ctx: ProposalContext,
                        order: Sequence[int]=None):
    """
    log T(target | z) of a reconfiguration kernel, by replaying the kernel
    from z with every choice forced towards ``target``.

    Parameters
    ----------
    kernel : {'srm', 'sarm', 'arm'}
    model : ConjugateModel
    z : Partition or SufficientStats
        Starting state.
    target : Partition
        State to reach.
    ctx : ProposalContext
    order : sequence of int, optional

    Returns
    -------
    float
        The log probability of the unique path from z to ``target``, or
        -inf if no path exists.

    Raises
    ------
    KernelError
        If the kernel is not a reconfiguration kernel or the search does
        not terminate within its limit.
    """
    if kernel not in RECONFIGURATION:
        raise KernelError("forced replay is defined for %s, not '%s'" % (RECONFIGURATION, kernel))
    stats = _as_stats(model, z)
    _check_context(stats, ctx, adaptive=kernel != 'srm')
    rank = _ranks(order, stats.n)
    stack = [()]
    attempts = 0
    while stack:
        attempts += 1
        if attempts > _REPLAY_LIMIT:
            raise KernelError("forced replay did not terminate")
        policy = ForcedPolicy(target, stack.pop())
        try:
            work, _, log_t = _reconfigure(kernel, model, stats, ctx, policy, rank)
            if work.partition() == target:
                return log_t
        except _DeadEnd:
            pass
        for position, alternatives in reversed(policy.branches):
            for k in reversed(alternatives):
                stack.append(tuple(policy.taken[:position]) + (k,))
    return -np.inf

def _reconfiguration_move(kind, model, z, ctx, rng, order, reverse):
    stats = _as_stats(model, z)
    _check_context(stats, ctx, adaptive=kind != 'srm')
    chooser = _Recording(as_chooser(rng))
    rank = _ranks(order, stats.n)
    state, move, log_t_fwd = _reconfigure(kind, model, stats, ctx, chooser, rank)
    log_t_rev = np.nan
    if reverse:
        log_t_rev = forced_log_proposal(kind, model, state, stats.partition(), ctx, order)
        if np.isneginf(log_t_rev):
            logger.debug("%s: current state unreachable from the proposal", kind)
    return _outcome(stats, state, move, log_t_fwd, log_t_rev, chooser.taken)

def srm_propose(model, z, i: int, j: int, rng=None, order: Sequence[int]=None,
                reverse: bool=True):
    """
    Simplified reconfiguration move.

    The blocks of i and j are removed and reseeded with {i} and {j}
    (split) or {i, j} (merge). Every other observation h is then updated
    once, in ``order``: members of the removed blocks by an unrestricted
    sweep, other observations by a sweep between the blocks of i and j
    and their own block. An outside observation that is the last original
    member of a block that received a newcomer stays where it is.

    Parameters
    ----------
    model : ConjugateModel
    z : Partition or SufficientStats
    i, j : int
    rng : numpy.random.Generator or chooser
    order : sequence of int, optional
    reverse : bool, default: True
        Compute log T(z|z*) by :func:`forced_log_proposal`. Switched off
        by the oracle, which only needs forward paths.

    Returns
    -------
    MoveOutcome
    """
    return _reconfiguration_move('srm', model, z, ProposalContext(i, j), rng, order, reverse)

def sarm_propose(model, z, ctx: ProposalContext, rng=None, order: Sequence[int]=None,
                 reverse: bool=True):
    """
    :func:`srm_propose` with i and j seeded by their blocks of the
    refinement ``za v zb v z`` restricted to the blocks of i and j.
    """
    return _reconfiguration_move('sarm', model, z, ctx, rng, order, reverse)

def arm_propose(model, z, ctx: ProposalContext, rng=None, order: Sequence[int]=None,
                reverse: bool=True):
    """
    Adaptive reconfiguration move.

    As :func:`sarm_propose`, and the refinement blocks not holding i or j
    are first moved as whole blocks by unrestricted sweeps, largest first.
    The first element of each moved block is its earmark and does not
    move again; the other members are updated individually later by
    unrestricted sweeps, whatever block they ended up in.
    """
    return _reconfiguration_move('arm', model, z, ctx, rng, order, reverse)

def propose(kind: str, model, z, ctx: ProposalContext, rng=None, L: int=5,
            order: Sequence[int]=None, reverse: bool=True):
    """
    Run the kernel named ``kind`` on the pair of ``ctx``.

    ``L`` applies to the split-merge kernels only; ``reverse=False`` skips the
    forced replay of the reconfiguration kernels, whose reverse term is then
    NaN. Split-merge moves always compute both directions.

    Raises
    ------
    KernelError
        If ``kind`` is not one of :data:`KERNELS`.
    """
    if kind == 'sm':
        return sm_propose(model, z, ctx.i, ctx.j, L, rng, order)
    if kind == 'bsm':
        return bsm_propose(model, z, ctx, L, rng, order)
    if kind == 'srm':
        return srm_propose(model, z, ctx.i, ctx.j, rng, order, reverse)
    if kind == 'sarm':
        return sarm_propose(model, z, ctx, rng, order, reverse)
    if kind == 'arm':
        return arm_propose(model, z, ctx, rng, order, reverse)
    raise KernelError("unknown kernel '%s', expected one of %s" % (kind, KERNELS))
