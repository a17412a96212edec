use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A planar location (or displacement/velocity) in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Position) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Position {
    fn add_assign(&mut self, rhs: Position) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Position {
    type Output = Position;
    fn mul(self, rhs: f64) -> Position {
        Position::new(self.x * rhs, self.y * rhs)
    }
}

/// Arithmetic mean of a point set. `None` when the set is empty.
pub fn centroid<I>(points: I) -> Option<Position>
where
    I: IntoIterator<Item = Position>,
{
    let mut sum = Position::ORIGIN;
    let mut count = 0usize;
    for p in points {
        sum += p;
        count += 1;
    }
    (count > 0).then(|| sum * (1.0 / count as f64))
}

/// Packs positions into an `n x 2` matrix.
pub fn to_matrix(points: &[Position]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 2, |i, j| if j == 0 { points[i].x } else { points[i].y })
}

/// Unpacks the rows of an `n x 2` matrix.
pub fn from_matrix(m: &DMatrix<f64>) -> Vec<Position> {
    assert_eq!(m.ncols(), 2, "position matrices have two columns");
    (0..m.nrows()).map(|i| Position::new(m[(i, 0)], m[(i, 1)])).collect()
}
