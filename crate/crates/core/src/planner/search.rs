use std::cmp::Ordering;

use rayon::prelude::*;

use super::network::TruckNetwork;
use super::split::{DpState, Splitter, TieKey};
use super::{is_valid_tour, Instance, Plan, PlanError, DURATION_EPS};
use crate::estimators::DroneTimeModel;

/// Largest instance the exhaustive search accepts.
pub const EXACT_MAX_NODES: usize = 7;

/// Greedy tour from the depot, always driving to the closest unvisited node
/// (ties to the lower index).
pub fn nearest_neighbor_tour(net: &TruckNetwork) -> Vec<usize> {
    let n = net.n_nodes - 1;
    let mut tour = Vec::with_capacity(n + 2);
    tour.push(0);
    let mut left: Vec<usize> = (1..=n).collect();
    let mut at = 0;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| net.time(at, a).total_cmp(&net.time(at, b)).then(a.cmp(&b)))
            .unwrap();
        at = left.remove(pos);
        tour.push(at);
    }
    tour.push(0);
    tour
}

/// First-improvement 2-opt on truck time. `seed` rotates the position at which
/// each scan starts.
pub fn two_opt(net: &TruckNetwork, mut tour: Vec<usize>, seed: u64) -> Vec<usize> {
    let n = tour.len() - 2;
    if n < 2 {
        return tour;
    }
    let offset = (seed % n as u64) as usize;
    let t = |a: usize, b: usize| net.time(a, b);
    'restart: loop {
        let scale = net.route_time(&tour).max(1.0);
        for a in 0..n {
            let i = 1 + (a + offset) % n;
            for j in i + 1..=n {
                let delta = t(tour[i - 1], tour[j]) + t(tour[i], tour[j + 1]) - t(tour[i - 1], tour[i]) - t(tour[j], tour[j + 1]);
                if delta < -1e-9 * scale {
                    tour[i..=j].reverse();
                    continue 'restart;
                }
            }
        }
        return tour;
    }
}

/// Nearest-neighbour start polished by 2-opt.
pub fn initial_tour_two_opt(inst: &Instance, seed: u64) -> Result<Vec<usize>, PlanError> {
    inst.validate()?;
    let net = TruckNetwork::build(inst)?;
    Ok(two_opt(&net, nearest_neighbor_tour(&net), seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Relocate(usize, usize),
    Swap(usize, usize),
    TwoOpt(usize, usize),
}

impl Move {
    fn first_changed(self) -> usize {
        match self {
            Move::Relocate(p, q) | Move::Swap(p, q) | Move::TwoOpt(p, q) => p.min(q),
        }
    }

    fn apply(self, tour: &[usize], out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(tour);
        match self {
            Move::Relocate(p, q) => {
                let u = out.remove(p);
                out.insert(q, u);
            }
            Move::Swap(p, q) => out.swap(p, q),
            Move::TwoOpt(p, q) => out[p..=q].reverse(),
        }
    }
}

fn neighborhood(n: usize) -> Vec<Move> {
    let mut moves = Vec::with_capacity(2 * n * n);
    for p in 1..=n {
        for q in 1..=n {
            if p != q {
                moves.push(Move::Relocate(p, q));
            }
        }
    }
    for p in 1..=n {
        for q in p + 2..=n {
            moves.push(Move::Swap(p, q));
        }
    }
    for p in 1..=n {
        for q in p + 1..=n {
            moves.push(Move::TwoOpt(p, q));
        }
    }
    moves
}

/// Durations within `DURATION_EPS` relative count as equal.
fn duration_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= DURATION_EPS * a.abs().max(b.abs()) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

impl Splitter<'_> {
    /// Best-improvement local search over relocate, swap and 2-opt neighbours.
    /// `budget` caps the number of adopted moves; `None` runs to a local optimum.
    pub fn improve(&self, tour: &[usize], budget: Option<usize>) -> (Vec<usize>, Plan) {
        let key = TieKey::DroneCount;
        let mut cur = tour.to_vec();
        let mut st = DpState::default();
        self.run(&cur, key, 1, &mut st);
        let moves = neighborhood(self.n());
        let mut adopted = 0;
        while budget.is_none_or(|b| adopted < b) {
            let (cd, cs) = st.value();
            let values: Vec<(f64, f64)> = moves
                .par_iter()
                .map_init(
                    || (st.clone(), Vec::with_capacity(cur.len())),
                    |(scratch, buf), &mv| {
                        mv.apply(&cur, buf);
                        scratch.copy_from(&st);
                        self.run(buf, key, mv.first_changed(), scratch);
                        scratch.value()
                    },
                )
                .collect();
            let mut best: Option<usize> = None;
            for (idx, &(d, s)) in values.iter().enumerate() {
                let adoptable = d < cd * (1.0 - DURATION_EPS) || (d <= cd && s < cs);
                if !adoptable {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (bd, bs) = values[b];
                        match duration_cmp(d, bd).then(s.total_cmp(&bs)) {
                            Ordering::Less => true,
                            Ordering::Greater => false,
                            Ordering::Equal => {
                                let (mut x, mut y) = (Vec::new(), Vec::new());
                                moves[idx].apply(&cur, &mut x);
                                moves[b].apply(&cur, &mut y);
                                x < y
                            }
                        }
                    }
                };
                if better {
                    best = Some(idx);
                }
            }
            let Some(b) = best else { break };
            let mut next = Vec::new();
            moves[b].apply(&cur, &mut next);
            cur = next;
            self.run(&cur, key, moves[b].first_changed(), &mut st);
            adopted += 1;
        }
        let plan = self.plan_from(&cur, &st);
        (cur, plan)
    }

    /// Exhaustive search over all tours and all splits; lexicographic in
    /// (duration, total estimated drone time).
    pub fn exact_small(&self) -> Result<(Vec<usize>, Plan), PlanError> {
        let n = self.n();
        if n > EXACT_MAX_NODES {
            return Err(PlanError::SizeError { n, max: EXACT_MAX_NODES });
        }
        let key = TieKey::DroneTime;
        let mut tour: Vec<usize> = (0..=n).chain([0]).collect();
        let mut st = DpState::default();
        self.run(&tour, key, 1, &mut st);
        let mut best = (st.value(), tour.clone());
        while let Some(from) = next_permutation(&mut tour[1..=n]) {
            self.run(&tour, key, from + 1, &mut st);
            let (d, s) = st.value();
            let (bd, bs) = best.0;
            if duration_cmp(d, bd).then(s.total_cmp(&bs)) == Ordering::Less {
                best = ((d, s), tour.clone());
            }
        }
        let tour = best.1;
        self.run(&tour, key, 1, &mut st);
        let plan = self.plan_from(&tour, &st);
        Ok((tour, plan))
    }
}

/// Advances to the next lexicographic permutation; returns the first index that changed.
fn next_permutation(v: &mut [usize]) -> Option<usize> {
    let i = (1..v.len()).rev().find(|&i| v[i - 1] < v[i])? - 1;
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    Some(i)
}

/// Local search from `tour`; see [`Splitter::improve`].
pub fn improve(
    inst: &Instance,
    tour: &[usize],
    est: &dyn DroneTimeModel,
    budget: Option<usize>,
) -> Result<(Vec<usize>, Plan), PlanError> {
    let sp = Splitter::new(inst, est)?;
    if !is_valid_tour(tour, inst.n()) {
        return Err(PlanError::InvalidInstance("tour is not a depot-anchored permutation".into()));
    }
    Ok(sp.improve(tour, budget))
}

/// Global optimum for instances with at most [`EXACT_MAX_NODES`] deliveries.
pub fn exact_small(inst: &Instance, est: &dyn DroneTimeModel) -> Result<Plan, PlanError> {
    if inst.n() > EXACT_MAX_NODES {
        return Err(PlanError::SizeError {
            n: inst.n(),
            max: EXACT_MAX_NODES,
        });
    }
    Ok(Splitter::new(inst, est)?.exact_small()?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn permutations_are_complete() {
        let mut v = vec![1, 2, 3, 4];
        let mut count = 1;
        let mut prev = v.clone();
        while let Some(i) = next_permutation(&mut v) {
            assert_eq!(prev[..i], v[..i]);
            assert!(prev < v);
            prev = v.clone();
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn unit_square_perimeter() {
        let pts = [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 1.0)];
        let inst = Instance::euclidean(Point2::new(0.0, 0.0), &pts, 1.0);
        let tour = initial_tour_two_opt(&inst, 0).unwrap();
        let net = TruckNetwork::build(&inst).unwrap();
        assert!((net.route_time(&tour) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn neighborhood_size() {
        assert_eq!(neighborhood(5).len(), 20 + 6 + 10);
    }
}
