//! Fixed-timestep kinematic vehicle integration.

use serde::{Deserialize, Serialize};

use crate::geom::{heading_dir, normalize_angle};
use crate::scene::SemanticClass;

/// Ground-truth state of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    /// Meters per second, never negative.
    pub speed: f64,
}

/// A control command; components are clamped on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub throttle: f64,
    pub steer: f64,
    pub brake: f64,
}

impl Action {
    pub fn new(throttle: f64, steer: f64, brake: f64) -> Self {
        Action {
            throttle: throttle.clamp(0.0, 1.0),
            steer: steer.clamp(-1.0, 1.0),
            brake: brake.clamp(0.0, 1.0),
        }
    }

    pub fn coast() -> Self {
        Action {
            throttle: 0.0,
            steer: 0.0,
            brake: 0.0,
        }
    }
}

/// Kinematic bicycle parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Peak acceleration at full throttle, m/s^2.
    pub max_accel: f64,
    /// Peak deceleration at full brake, m/s^2.
    pub max_brake: f64,
    /// Linear drag coefficient, 1/s.
    pub drag: f64,
    /// Wheelbase, meters.
    pub wheelbase: f64,
    /// Steering limit, radians; full steer input maps to this angle.
    pub max_steer: f64,
    /// Walkers set their heading directly from the steer input instead of
    /// integrating a turn rate.
    pub direct_heading: bool,
}

impl VehicleParams {
    pub fn car() -> Self {
        VehicleParams {
            max_accel: 4.0,
            max_brake: 8.0,
            drag: 0.05,
            wheelbase: 2.7,
            max_steer: 35f64.to_radians(),
            direct_heading: false,
        }
    }

    pub fn pedestrian() -> Self {
        VehicleParams {
            max_accel: 1.5,
            max_brake: 8.0,
            drag: 0.05,
            wheelbase: 2.7,
            max_steer: std::f64::consts::PI,
            direct_heading: true,
        }
    }

    /// Integration parameters for a semantic class; `None` for classes that
    /// never move.
    pub fn for_class(class: SemanticClass) -> Option<Self> {
        match class {
            SemanticClass::Vehicle => Some(Self::car()),
            SemanticClass::Pedestrian => Some(Self::pedestrian()),
            _ => None,
        }
    }
}

/// Advance one timestep:
///
/// ```text
/// accel    = max_accel * throttle - max_brake * brake - drag * speed
/// speed'   = max(0, speed + accel * dt)
/// heading' = heading + (speed' / wheelbase) * tan(steer * max_steer) * dt
/// pos'     = pos + speed' * dt * dir(heading')
/// ```
///
/// Direct-heading agents replace the heading update with
/// `heading' = steer * max_steer` while moving; steering never changes
/// heading at zero speed.
pub fn step_dynamics(s: &AgentState, a: Action, dt: f64, p: &VehicleParams) -> AgentState {
    debug_assert!(dt > 0.0);
    let accel = p.max_accel * a.throttle - p.max_brake * a.brake - p.drag * s.speed;
    let speed = (s.speed + accel * dt).max(0.0);
    let heading = if speed == 0.0 {
        s.heading
    } else if p.direct_heading {
        normalize_angle(a.steer * p.max_steer)
    } else {
        normalize_angle(s.heading + (speed / p.wheelbase) * (a.steer * p.max_steer).tan() * dt)
    };
    let dir = heading_dir(heading);
    AgentState {
        x: s.x + speed * dt * dir.x,
        y: s.y + speed * dt * dir.y,
        heading,
        speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 15.0;

    fn rest() -> AgentState {
        AgentState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 0.0,
        }
    }

    #[test]
    fn equilibrium_at_rest() {
        let s = step_dynamics(&rest(), Action::coast(), DT, &VehicleParams::car());
        assert_eq!(s, rest());
    }

    #[test]
    fn full_throttle_from_rest() {
        let s = step_dynamics(&rest(), Action::new(1.0, 0.0, 0.0), DT, &VehicleParams::car());
        // 4 m/s^2 for 1/15 s.
        assert!((s.speed - 4.0 / 15.0).abs() < 1e-12, "speed = {}", s.speed);
        assert_eq!(s.heading, 0.0);
        assert!((s.y - s.speed * DT).abs() < 1e-12);
    }

    #[test]
    fn braking_with_drag() {
        let mut st = rest();
        st.speed = 10.0;
        let s = step_dynamics(&st, Action::new(0.0, 0.0, 1.0), DT, &VehicleParams::car());
        // 10 - (8 + 0.05*10)/15 = 10 - 8.5/15.
        let expected = 10.0 - 8.5 / 15.0;
        assert!((s.speed - expected).abs() < 1e-12, "speed = {}", s.speed);
        assert!((expected - 9.4333).abs() < 1e-4);
    }

    #[test]
    fn no_drag_constant_throttle_reaches_exact_speed() {
        let mut p = VehicleParams::car();
        p.drag = 0.0;
        let mut s = rest();
        for _ in 0..15 {
            s = step_dynamics(&s, Action::new(1.0, 0.0, 0.0), DT, &p);
        }
        assert!((s.speed - 4.0).abs() < 1e-9, "speed = {}", s.speed);
    }

    #[test]
    fn speed_never_negative() {
        let mut st = rest();
        st.speed = 0.1;
        let s = step_dynamics(&st, Action::new(0.0, 0.0, 1.0), DT, &VehicleParams::car());
        assert_eq!(s.speed, 0.0);
    }

    #[test]
    fn zero_speed_steering_has_no_effect() {
        for params in [VehicleParams::car(), VehicleParams::pedestrian()] {
            let s = step_dynamics(&rest(), Action::new(0.0, 1.0, 0.0), DT, &params);
            assert_eq!(s.heading, 0.0);
        }
    }

    #[test]
    fn pedestrian_heading_is_direct_while_moving() {
        let p = VehicleParams::pedestrian();
        let s = step_dynamics(&rest(), Action::new(1.0, 0.5, 0.0), DT, &p);
        assert!(s.speed > 0.0);
        assert!((s.heading - 0.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn action_components_clamp() {
        let a = Action::new(2.0, -3.0, -1.0);
        assert_eq!((a.throttle, a.steer, a.brake), (1.0, -1.0, 0.0));
    }

    // Property sweep: random actions never break the state invariants.
    #[test]
    fn invariants_hold_under_random_actions() {
        use crate::rng::Pcg32;
        let mut rng = Pcg32::new(2024);
        for params in [VehicleParams::car(), VehicleParams::pedestrian()] {
            let mut s = rest();
            for k in 0..20_000 {
                let a = Action::new(
                    rng.next_double() * 1.4 - 0.2,
                    rng.next_double() * 2.4 - 1.2,
                    rng.next_double() * 1.4 - 0.2,
                );
                s = step_dynamics(&s, a, DT, &params);
                assert!(s.speed >= 0.0, "step {k}: speed {}", s.speed);
                assert!(s.heading.abs() <= std::f64::consts::PI, "step {k}: heading {}", s.heading);
                if k % 997 == 0 {
                    s = rest();
                }
            }
        }
    }
}
