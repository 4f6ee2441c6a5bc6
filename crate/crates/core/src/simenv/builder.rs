use super::{Region, SceneObject, SimWorld};
use crate::geom::Point2;

/// Carves free space out of an all-wall bitmap. Rectangles are given in
/// world metres as `(x0, y0, x1, y1)`; a cell is affected when its centre
/// lies inside.
#[derive(Debug, Clone)]
pub struct MapBuilder {
    world: SimWorld,
}

impl MapBuilder {
    pub fn new(width_m: f64, height_m: f64, cell_size: f64) -> Self {
        let w = (width_m / cell_size).round() as usize;
        let h = (height_m / cell_size).round() as usize;
        Self {
            world: SimWorld::new(w, h, cell_size, vec![true; w * h]).expect("valid builder dims"),
        }
    }

    /// Parses text rows: `#` is wall, anything else free.
    pub fn from_ascii(rows: &[&str], cell_size: f64) -> Self {
        let h = rows.len();
        let w = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut occupied = vec![true; w * h];
        for (r, line) in rows.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                occupied[r * w + c] = ch == '#';
            }
        }
        Self {
            world: SimWorld::new(w, h, cell_size, occupied).expect("valid ascii map"),
        }
    }

    fn paint(mut self, x0: f64, y0: f64, x1: f64, y1: f64, wall: bool) -> Self {
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        for r in 0..self.world.height {
            for c in 0..self.world.width {
                let p = self.world.cell_center((r, c));
                if p.x > xa && p.x < xb && p.y > ya && p.y < yb {
                    self.world.occupied[r * self.world.width + c] = wall;
                }
            }
        }
        self
    }

    pub fn carve_rect(self, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        self.paint(x0, y0, x1, y1, false)
    }

    pub fn wall_rect(self, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        self.paint(x0, y0, x1, y1, true)
    }

    pub fn region(mut self, label: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        self.world.regions.push(Region {
            label: label.to_string(),
            polygon: vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
        });
        self
    }

    pub fn object(mut self, label: &str, x: f64, y: f64) -> Self {
        self.world.objects.push(SceneObject {
            label: label.to_string(),
            position: Point2::new(x, y),
        });
        self
    }

    pub fn build(self) -> SimWorld {
        self.world
    }
}
