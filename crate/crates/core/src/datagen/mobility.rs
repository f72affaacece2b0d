//! Random waypoint mobility.

use serde::{Deserialize, Serialize};

use super::MobilityParams;
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Current leg speed; zero while pausing at a waypoint.
    pub speed: f64,
}

/// Continuous-time random waypoint walker on `[0, side]^2`.
#[derive(Debug, Clone)]
pub struct Walker {
    side: f64,
    mob: MobilityParams,
    x: f64,
    y: f64,
    dest: (f64, f64),
    speed: f64,
    pause_left: f64,
}

impl Walker {
    pub fn new(mob: &MobilityParams, side: f64, rng: &mut RngStream) -> Self {
        let x = rng.uniform() * side;
        let y = rng.uniform() * side;
        let mut w = Self {
            side,
            mob: mob.clone(),
            x,
            y,
            dest: (x, y),
            speed: 0.0,
            pause_left: 0.0,
        };
        w.next_leg(rng);
        w
    }

    fn next_leg(&mut self, rng: &mut RngStream) {
        self.dest = (rng.uniform() * self.side, rng.uniform() * self.side);
        self.speed = rng.uniform_range(self.mob.v_min, self.mob.v_max);
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn reported_speed(&self) -> f64 {
        if self.pause_left > 0.0 {
            0.0
        } else {
            self.speed
        }
    }

    /// Moves the walker forward by `dt` seconds.
    pub fn advance(&mut self, mut dt: f64, rng: &mut RngStream) {
        while dt > 0.0 {
            if self.pause_left > 0.0 {
                let p = self.pause_left.min(dt);
                self.pause_left -= p;
                dt -= p;
                if self.pause_left <= 0.0 {
                    self.pause_left = 0.0;
                    self.next_leg(rng);
                }
                continue;
            }
            let dx = self.dest.0 - self.x;
            let dy = self.dest.1 - self.y;
            let dist = (dx * dx + dy * dy).sqrt();
            let reach = dist / self.speed;
            if reach > dt {
                let f = self.speed * dt / dist;
                self.x += dx * f;
                self.y += dy * f;
                dt = 0.0;
            } else {
                self.x = self.dest.0;
                self.y = self.dest.1;
                dt -= reach;
                if self.mob.pause_s > 0.0 {
                    self.pause_left = self.mob.pause_s;
                } else {
                    self.next_leg(rng);
                }
            }
        }
        self.x = self.x.clamp(0.0, self.side);
        self.y = self.y.clamp(0.0, self.side);
    }
}

/// Trajectory sampled every `dt_s` over `[0, duration_s]`, after the
/// configured warm-up.
pub fn random_waypoint(
    mob: &MobilityParams,
    area_side_m: f64,
    duration_s: f64,
    dt_s: f64,
    rng: &mut RngStream,
) -> Vec<TrajectoryPoint> {
    assert!(dt_s > 0.0, "dt_s must be positive");
    let mut walker = Walker::new(mob, area_side_m, rng);
    if mob.warmup_s > 0.0 {
        walker.advance(mob.warmup_s, rng);
    }
    let steps = (duration_s / dt_s).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            walker.advance(dt_s, rng);
        }
        let (x, y) = walker.position();
        out.push(TrajectoryPoint { t: i as f64 * dt_s, x, y, speed: walker.reported_speed() });
    }
    out
}
