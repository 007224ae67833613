//! Rational parameter grids strictly inside `(½, ⅔)`.

use serde::Serialize;

use crate::exact::{f64_from_ratio, reduce};
use crate::{Lambda, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub num: i64,
    pub den: i64,
}

impl GridPoint {
    pub fn value(&self) -> f64 {
        f64_from_ratio(self.num, self.den)
    }

    pub fn lambda(&self) -> Result<Lambda> {
        Lambda::new(self.value())
    }

    pub fn fraction(&self) -> String {
        format!("{}/{}", self.num, self.den)
    }
}

/// `count` equally spaced points `(3(G+1)+j) / (6(G+1))`, `j = 1..=G`,
/// reduced to lowest terms and sorted.
pub fn lambda_grid(count: usize) -> Vec<GridPoint> {
    let g = count as i64;
    let den = 6 * (g + 1);
    (1..=g)
        .map(|j| {
            let (num, den) = reduce(3 * (g + 1) + j, den);
            GridPoint { num, den }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inside_and_sorted() {
        let grid = lambda_grid(50);
        assert_eq!(grid.len(), 50);
        assert!(grid.iter().all(|p| p.value() > 0.5 && p.value() < 2.0 / 3.0));
        assert!(grid.windows(2).all(|w| w[0].value() < w[1].value()));
    }

    #[test]
    fn single_point_is_the_midpoint() {
        let grid = lambda_grid(1);
        assert_eq!(grid[0], GridPoint { num: 7, den: 12 });
    }
}
