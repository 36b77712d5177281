use serde::{Deserialize, Serialize};

use crate::metric::Point;
use crate::{Error, Result};

/// A discrete curve `q_0, ..., q_N`.
///
/// Open trajectories store every point including both endpoints. Closed
/// trajectories store `q_0, ..., q_{N-1}` and close implicitly back to `q_0`,
/// so the first vertex is never repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Trajectory {
    pub fn new(points: Vec<Point>, closed: bool) -> Self {
        Self { points, closed }
    }

    pub fn open(points: Vec<Point>) -> Self {
        Self::new(points, false)
    }

    pub fn closed(points: Vec<Point>) -> Self {
        Self::new(points, true)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        match (self.closed, self.points.len()) {
            (_, 0) => 0,
            (true, n) => n,
            (false, n) => n - 1,
        }
    }

    /// Consecutive point pairs, including the wrap-around pair when closed.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        (0..self.segment_count()).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    /// Same curve traversed backwards. Closed curves keep `q_0` in front.
    pub fn reversed(&self) -> Trajectory {
        let mut points = self.points.clone();
        if self.closed && !points.is_empty() {
            points[1..].reverse();
        } else {
            points.reverse();
        }
        Trajectory::new(points, self.closed)
    }

    /// Rotate the starting index of a closed curve by `shift`.
    pub fn cyclic_shift(&self, shift: usize) -> Trajectory {
        let mut points = self.points.clone();
        if !points.is_empty() {
            let k = shift % points.len();
            points.rotate_left(k);
        }
        Trajectory::new(points, self.closed)
    }

    /// Reflect across `z = 0` and reverse the traversal direction.
    pub fn mirrored(&self) -> Trajectory {
        let mut t = self.reversed();
        for p in &mut t.points {
            *p = p.mirrored();
        }
        t
    }

    /// Checks the structural preconditions shared by the solvers: enough
    /// points, finite coordinates, and `r > 0` at every free vertex.
    pub fn validate(&self) -> Result<()> {
        let min = if self.closed { 3 } else { 2 };
        if self.points.len() < min {
            return Err(Error::InvalidInput(format!(
                "{} trajectory needs at least {min} points, got {}",
                if self.closed { "closed" } else { "open" },
                self.points.len()
            )));
        }
        if let Some(k) = self.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("point {k} is not finite")));
        }
        let interior = if self.closed {
            &self.points[..]
        } else {
            &self.points[1..self.points.len() - 1]
        };
        if let Some(p) = interior.iter().find(|p| p.r <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "interior point {p} has r <= 0"
            )));
        }
        if self.points.iter().any(|p| p.r < 0.0) {
            return Err(Error::InvalidInput("endpoint has r < 0".into()));
        }
        Ok(())
    }
}
