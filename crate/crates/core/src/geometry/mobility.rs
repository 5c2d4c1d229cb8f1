use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Axis-aligned rectangle on the UE plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Uniform point in the rectangle.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let x = self.x_min + rng.random::<f64>() * self.width();
        let y = self.y_min + rng.random::<f64>() * self.height();
        (x, y)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.width() <= 0.0 || self.height() <= 0.0 {
            return Err(Error::invalid(field, "rectangle must have positive, finite extent"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityParams {
    /// m/s
    pub speed: f64,
    pub bounds: Rect,
    /// s
    pub pause_time: f64,
}

impl MobilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(Error::invalid("mobility.speed", "must be >= 0"));
        }
        if !(self.pause_time.is_finite() && self.pause_time >= 0.0) {
            return Err(Error::invalid("mobility.pause_time", "must be >= 0"));
        }
        self.bounds.validate("mobility.bounds")
    }
}

/// A user: position on the UE plane, receiver normal, current waypoint and
/// the identity tag its CCR modulator imprints on reflected light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    pub id: u32,
    pub position: Vec3,
    pub normal: Vec3,
    pub waypoint: Vec3,
    /// Pause time left at the current waypoint (s).
    pub pause_left: f64,
}

impl UeState {
    /// Static user facing straight up.
    pub fn at(id: u32, position: Vec3) -> Self {
        UeState {
            id,
            position,
            normal: Vec3::UP,
            waypoint: position,
            pause_left: 0.0,
        }
    }

    /// Starts a walker in the stationary regime of the random waypoint
    /// process, so the position density does not drift during a run.
    ///
    /// The current leg is drawn with probability proportional to its length
    /// and the start point is uniform along it. Pauses are ignored here.
    pub fn stationary<R: Rng + ?Sized>(
        id: u32,
        mobility: &MobilityParams,
        z: f64,
        rng: &mut R,
    ) -> Self {
        let b = mobility.bounds;
        let diag = b.width().hypot(b.height());
        let (p, q) = loop {
            let p = b.sample(rng);
            let q = b.sample(rng);
            let len = (q.0 - p.0).hypot(q.1 - p.1);
            if rng.random::<f64>() * diag < len {
                break (p, q);
            }
        };
        let u: f64 = rng.random();
        let position = Vec3::new(p.0 + u * (q.0 - p.0), p.1 + u * (q.1 - p.1), z);
        UeState {
            id,
            position,
            normal: Vec3::UP,
            waypoint: Vec3::new(q.0, q.1, z),
            pause_left: 0.0,
        }
    }
}

/// Advances a random waypoint walker by `dt` seconds.
///
/// Moves toward the waypoint at `speed`; on arrival it waits `pause_time`
/// and heads to a fresh uniform waypoint. Several legs may finish inside one
/// step when `dt` is long.
pub fn random_waypoint_step<R: Rng + ?Sized>(
    state: &UeState,
    mobility: &MobilityParams,
    dt: f64,
    rng: &mut R,
) -> UeState {
    let mut s = *state;
    if mobility.speed <= 0.0 || !(dt > 0.0) {
        return s;
    }
    let mut remaining = dt;
    // bounded so a degenerate zero-area walk cannot spin forever
    for _ in 0..10_000 {
        if remaining <= 0.0 {
            break;
        }
        if s.pause_left > 0.0 {
            let wait = s.pause_left.min(remaining);
            s.pause_left -= wait;
            remaining -= wait;
            continue;
        }
        let to_go = s.waypoint - s.position;
        let dist = to_go.x.hypot(to_go.y);
        let reach = mobility.speed * remaining;
        if dist > reach {
            let f = reach / dist;
            let b = mobility.bounds;
            s.position.x = (s.position.x + to_go.x * f).clamp(b.x_min, b.x_max);
            s.position.y = (s.position.y + to_go.y * f).clamp(b.y_min, b.y_max);
            break;
        }
        s.position.x = s.waypoint.x;
        s.position.y = s.waypoint.y;
        remaining -= dist / mobility.speed;
        s.pause_left = mobility.pause_time;
        let (wx, wy) = mobility.bounds.sample(rng);
        s.waypoint = Vec3::new(wx, wy, s.position.z);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_square(speed: f64) -> MobilityParams {
        MobilityParams {
            speed,
            bounds: Rect::new(0.0, 1.0, 0.0, 1.0),
            pause_time: 0.0,
        }
    }

    #[test]
    fn zero_speed_stays_put() {
        let mut r = rng::stream(1, 0, 0);
        let mut ue = UeState::at(0, Vec3::new(0.3, 0.4, 1.5));
        ue.waypoint = Vec3::new(0.9, 0.9, 1.5);
        for dt in [1e-3, 1.0, 100.0] {
            let next = random_waypoint_step(&ue, &unit_square(0.0), dt, &mut r);
            assert_eq!(next.position, ue.position);
        }
    }

    #[test]
    fn moves_toward_waypoint() {
        let mut r = rng::stream(1, 0, 0);
        let mut ue = UeState::at(0, Vec3::new(-0.5, 0.0, 1.5));
        ue.waypoint = Vec3::new(0.5, 0.0, 1.5);
        let m = MobilityParams {
            speed: 1.0,
            bounds: Rect::new(-1.0, 1.0, -1.0, 1.0),
            pause_time: 0.0,
        };
        let next = random_waypoint_step(&ue, &m, 0.1, &mut r);
        assert_abs_diff_eq!(next.position.x, -0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(next.position.y, 0.0);
    }

    #[test]
    fn pauses_on_arrival() {
        let mut r = rng::stream(1, 0, 0);
        let mut ue = UeState::at(0, Vec3::new(0.0, 0.0, 0.0));
        ue.waypoint = Vec3::new(0.1, 0.0, 0.0);
        let m = MobilityParams {
            pause_time: 1.0,
            ..unit_square(1.0)
        };
        let s = random_waypoint_step(&ue, &m, 0.5, &mut r);
        assert_eq!((s.position.x, s.position.y), (0.1, 0.0));
        assert_abs_diff_eq!(s.pause_left, 0.6, epsilon = 1e-12);
        let s = random_waypoint_step(&s, &m, 0.5, &mut r);
        assert_eq!((s.position.x, s.position.y), (0.1, 0.0));
    }

    /// Event-driven walker: draws whole legs and reads off the position at
    /// fixed sample times.
    fn reference_central_fraction(seed: u64, t_total: f64, dt: f64) -> f64 {
        let mut r = rng::stream(seed, 99, 0);
        let mut p: (f64, f64) = (r.random(), r.random());
        let mut t_leg_start = 0.0;
        let mut q: (f64, f64) = (r.random(), r.random());
        let mut leg_time = (q.0 - p.0).hypot(q.1 - p.1);
        let (mut inside, mut total) = (0usize, 0usize);
        let mut t = dt;
        while t <= t_total {
            while t > t_leg_start + leg_time {
                t_leg_start += leg_time;
                p = q;
                q = (r.random(), r.random());
                leg_time = (q.0 - p.0).hypot(q.1 - p.1);
            }
            let u = (t - t_leg_start) / leg_time;
            let x = p.0 + u * (q.0 - p.0);
            let y = p.1 + u * (q.1 - p.1);
            if (0.25..0.75).contains(&x) && (0.25..0.75).contains(&y) {
                inside += 1;
            }
            total += 1;
            t += dt;
        }
        inside as f64 / total as f64
    }

    #[test]
    fn long_run_density_matches_reference_walker() {
        let m = unit_square(1.0);
        let dt = 0.01;
        let (mut inside, mut total) = (0usize, 0usize);
        for w in 0..8u64 {
            let mut r = rng::stream(42, 7, w);
            let mut s = UeState::stationary(w as u32, &m, 0.0, &mut r);
            for _ in 0..100_000 {
                s = random_waypoint_step(&s, &m, dt, &mut r);
                if (0.25..0.75).contains(&s.position.x) && (0.25..0.75).contains(&s.position.y) {
                    inside += 1;
                }
                total += 1;
            }
        }
        let ours = inside as f64 / total as f64;
        let reference: f64 =
            (0..8).map(|w| reference_central_fraction(w, 1000.0, dt)).sum::<f64>() / 8.0;
        // uniform occupancy would give 0.25
        assert!(ours > 0.35, "central fraction {ours}");
        assert!((ours - reference).abs() < 0.03, "ours {ours} vs reference {reference}");
    }

    proptest! {
        #[test]
        fn never_leaves_bounds(seed in any::<u64>(), speed in 0.0f64..3.0, dt in 1e-4f64..0.5) {
            let m = MobilityParams { speed, bounds: Rect::new(-0.5, 0.5, -0.2, 0.7), pause_time: 0.05 };
            let mut r = rng::stream(seed, 0, 0);
            let mut s = UeState::stationary(0, &m, 1.5, &mut r);
            for _ in 0..200 {
                s = random_waypoint_step(&s, &m, dt, &mut r);
                prop_assert!(m.bounds.contains(s.position.x, s.position.y));
                prop_assert!(m.bounds.contains(s.waypoint.x, s.waypoint.y));
            }
        }
    }
}
