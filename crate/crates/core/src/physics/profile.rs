//! One-dimensional rest-to-rest speed profiles.

/// Continuous bang-bang rest-to-rest time over `distance`.
pub fn min_time_profile_1d(distance: f64, v_max: f64, a_max: f64) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    if distance < v_max * v_max / a_max {
        2.0 * (distance / a_max).sqrt()
    } else {
        distance / v_max + v_max / a_max
    }
}

/// Rest-to-rest profile sampled at `dt`: `speeds[k]` is the speed at sample k,
/// acceleration is constant within each step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProfile {
    pub speeds: Vec<f64>,
    pub dt: f64,
}

impl DiscreteProfile {
    pub fn steps(&self) -> usize {
        self.speeds.len().saturating_sub(1)
    }

    /// Arc length covered after each sample.
    pub fn positions(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.speeds.len());
        let mut s = 0.0;
        out.push(0.0);
        for w in self.speeds.windows(2) {
            s += self.dt * 0.5 * (w[0] + w[1]);
            out.push(s);
        }
        out
    }
}

fn envelope(n: usize, k: usize, v_cap: f64, a_dt: f64) -> f64 {
    v_cap.min(a_dt * k as f64).min(a_dt * (n - k) as f64)
}

fn max_distance(n: usize, v_cap: f64, a_max: f64, dt: f64) -> f64 {
    let a_dt = a_max * dt;
    (0..n)
        .map(|k| 0.5 * dt * (envelope(n, k, v_cap, a_dt) + envelope(n, k + 1, v_cap, a_dt)))
        .sum()
}

/// Fewest steps for a rest-to-rest move of `distance` on a grid of `dt`.
pub fn discrete_steps(distance: f64, v_cap: f64, a_max: f64, dt: f64) -> usize {
    if distance <= 0.0 {
        return 0;
    }
    let lower = (min_time_profile_1d(distance, v_cap, a_max) / dt - 1e-9).ceil().max(2.0) as usize;
    let mut n = lower;
    while max_distance(n, v_cap, a_max, dt) < distance {
        n += 1;
    }
    n
}

/// Minimum-step discrete profile, uniformly scaled so it covers exactly `distance`.
pub fn discrete_profile(distance: f64, v_cap: f64, a_max: f64, dt: f64) -> DiscreteProfile {
    let n = discrete_steps(distance, v_cap, a_max, dt);
    if n == 0 {
        return DiscreteProfile { speeds: vec![0.0], dt };
    }
    let scale = distance / max_distance(n, v_cap, a_max, dt);
    let a_dt = a_max * dt;
    let speeds = (0..=n).map(|k| scale * envelope(n, k, v_cap, a_dt)).collect();
    DiscreteProfile { speeds, dt }
}

/// Per-step vertical rates covering `dz` (signed) at `rate`. The partial step is
/// placed at the high end, so time spent near the ground is minimal.
pub fn vertical_rates(dz: f64, rate: f64, dt: f64) -> Vec<f64> {
    if dz.abs() <= 1e-12 {
        return Vec::new();
    }
    let per_step = rate * dt;
    let full = (dz.abs() / per_step - 1e-9).floor() as usize;
    let rem = dz.abs() - full as f64 * per_step;
    let sign = dz.signum();
    let mut out = vec![sign * rate; full];
    if rem > 1e-9 * per_step.max(1.0) {
        if sign > 0.0 {
            out.push(sign * rem / dt);
        } else {
            out.insert(0, sign * rem / dt);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_examples() {
        assert_eq!(min_time_profile_1d(0.0, 20.0, 4.0), 0.0);
        assert!((min_time_profile_1d(50.0, 20.0, 4.0) - 7.0711).abs() < 1e-4);
        assert!((min_time_profile_1d(200.0, 20.0, 4.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_profile_respects_limits() {
        for &d in &[0.5, 3.0, 10.0, 126.0, 700.0, 5000.0] {
            let p = discrete_profile(d, 19.44, 3.0, 1.0);
            let pos = p.positions();
            assert!((pos[pos.len() - 1] - d).abs() < 1e-9 * d.max(1.0));
            assert_eq!(p.speeds[0], 0.0);
            assert_eq!(*p.speeds.last().unwrap(), 0.0);
            for w in p.speeds.windows(2) {
                assert!((w[1] - w[0]).abs() <= 3.0 + 1e-12);
                assert!(w[1] <= 19.44 + 1e-12);
            }
            assert!(p.steps() as f64 >= min_time_profile_1d(d, 19.44, 3.0) - 1e-9);
            if p.steps() > 2 {
                let shorter = max_distance(p.steps() - 1, 19.44, 3.0, 1.0);
                assert!(shorter < d);
            }
        }
    }

    #[test]
    fn vertical_partial_step_sits_high() {
        let r = vertical_rates(48.5, 5.0, 1.0);
        assert_eq!(r.len(), 10);
        assert!((r[9] - 3.5).abs() < 1e-12);
        assert!(r[..9].iter().all(|&x| x == 5.0));
        let d = vertical_rates(-50.0, 3.0, 1.0);
        assert_eq!(d.len(), 17);
        assert!((d[0] + 2.0).abs() < 1e-12);
        assert!((d.iter().sum::<f64>() + 50.0).abs() < 1e-9);
        assert!(vertical_rates(0.0, 3.0, 1.0).is_empty());
    }
}
