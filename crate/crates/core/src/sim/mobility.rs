//! Manhattan-grid mobility on a torus.
//!
//! Roads are the lines `x = i·spacing` and `y = j·spacing`. A vehicle keeps
//! its speed for the whole run and, on reaching an intersection, goes
//! straight, left or right with equal probability. Only `+ - * /` are used
//! on floats, so trajectories are bit-identical everywhere.

use rand::Rng;

use super::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
    /// Horizontal roads (constant `y`).
    pub rows: usize,
    /// Vertical roads (constant `x`).
    pub cols: usize,
}

impl Grid {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            width: c.area_width_m,
            height: c.area_height_m,
            spacing: c.grid_spacing_m,
            rows: (c.area_height_m / c.grid_spacing_m).round() as usize,
            cols: (c.area_width_m / c.grid_spacing_m).round() as usize,
        }
    }

    /// Squared wrap-around distance.
    pub fn dist2(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let wrap = |d: f64, span: f64| {
            let d = d.abs();
            d.min(span - d)
        };
        let dx = wrap(a.0 - b.0, self.width);
        let dy = wrap(a.1 - b.1, self.height);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    /// Driving along a horizontal road.
    pub horizontal: bool,
    /// Index of the road among its kind.
    pub line: usize,
    /// Coordinate along the road, in `[0, road length)`.
    pub along: f64,
    /// Moving towards increasing coordinates.
    pub forward: bool,
    pub speed_m_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Straight,
    Left,
    Right,
}

impl Vehicle {
    pub fn random(grid: &Grid, speed_min_kmh: f64, speed_max_kmh: f64, rng: &mut impl Rng) -> Self {
        let h_len = grid.rows as f64 * grid.width;
        let v_len = grid.cols as f64 * grid.height;
        let horizontal = rng.gen::<f64>() * (h_len + v_len) < h_len;
        let (lines, length) = if horizontal {
            (grid.rows, grid.width)
        } else {
            (grid.cols, grid.height)
        };
        let kmh = speed_min_kmh + rng.gen::<f64>() * (speed_max_kmh - speed_min_kmh);
        Self {
            horizontal,
            line: rng.gen_range(0..lines),
            along: rng.gen::<f64>() * length,
            forward: rng.gen(),
            speed_m_s: kmh / 3.6,
        }
    }

    fn length(&self, grid: &Grid) -> f64 {
        if self.horizontal {
            grid.width
        } else {
            grid.height
        }
    }

    pub fn position(&self, grid: &Grid) -> (f64, f64) {
        let across = self.line as f64 * grid.spacing;
        if self.horizontal {
            (self.along, across)
        } else {
            (across, self.along)
        }
    }

    /// Heading in milliradians, counter-clockwise from +x.
    pub fn heading_mrad(&self) -> i64 {
        match (self.horizontal, self.forward) {
            (true, true) => 0,
            (false, true) => 1571,
            (true, false) => 3142,
            (false, false) => 4712,
        }
    }

    pub fn velocity(&self) -> (f64, f64) {
        let s = if self.forward { self.speed_m_s } else { -self.speed_m_s };
        if self.horizontal {
            (s, 0.0)
        } else {
            (0.0, s)
        }
    }

    /// Advances by `dt` seconds, asking `turn` at every intersection reached.
    pub fn advance(&mut self, grid: &Grid, dt: f64, mut turn: impl FnMut() -> Turn) {
        let mut left = self.speed_m_s * dt;
        loop {
            let s = grid.spacing;
            let k = (self.along / s).floor();
            let on_node = self.along == k * s;
            let next_node = match (self.forward, on_node) {
                (true, _) => k + 1.0,
                (false, true) => k - 1.0,
                (false, false) => k,
            };
            let gap = (next_node * s - self.along).abs();
            if left < gap {
                let step = if self.forward { left } else { -left };
                self.along = wrap(self.along + step, self.length(grid));
                return;
            }
            left -= gap;
            let lines_along = (self.length(grid) / s).round() as i64;
            let node = (next_node as i64).rem_euclid(lines_along) as usize;
            match turn() {
                Turn::Straight => self.along = node as f64 * s,
                t => {
                    let new_forward = if self.horizontal == (t == Turn::Left) {
                        self.forward
                    } else {
                        !self.forward
                    };
                    let old_line = self.line;
                    self.horizontal = !self.horizontal;
                    self.line = node;
                    self.along = old_line as f64 * s;
                    self.forward = new_forward;
                }
            }
            if left == 0.0 {
                return;
            }
        }
    }
}

fn wrap(v: f64, span: f64) -> f64 {
    let r = v % span;
    let r = if r < 0.0 { r + span } else { r };
    // `-tiny % span + span` can round up to `span` itself
    if r >= span {
        0.0
    } else {
        r
    }
}

pub fn random_turn(rng: &mut impl Rng) -> Turn {
    match rng.gen_range(0..3) {
        0 => Turn::Straight,
        1 => Turn::Left,
        _ => Turn::Right,
    }
}

/// Index of the RSU zone containing `pos`, row-major.
pub fn zone_of(grid: &Grid, zones_per_side: usize, pos: (f64, f64)) -> usize {
    let cell = |v: f64, span: f64| (((v / span) * zones_per_side as f64) as usize).min(zones_per_side - 1);
    cell(pos.1, grid.height) * zones_per_side + cell(pos.0, grid.width)
}
