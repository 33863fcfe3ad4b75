//! One-point-perspective corridor view for Maze 3D.
//!
//! The agent stands at the centre of cell 0 looking along its heading. Cell
//! `k` spans depths `k - 0.5 .. k + 0.5`; the boundary between cells `j` and
//! `j + 1` sits at depth `j + 0.5` and projects to a rectangle of half-size
//! `(160, 120) * 0.5 / z` around the screen centre. Boundary 0 therefore
//! fills the whole viewport.

use super::maze::MazeState;
use crate::render::{Canvas, Rgb};

pub const VIEW_W: u32 = 320;
pub const VIEW_H: u32 = 240;
const DEPTH: usize = 6;

const CEILING: Rgb = Rgb::new(196, 198, 210);
const FLOOR: Rgb = Rgb::new(150, 138, 116);
const FRONT: Rgb = Rgb::new(112, 122, 152);
const SIDE: Rgb = Rgb::new(88, 98, 128);
const OPENING: Rgb = Rgb::new(58, 62, 78);
const DARK: Rgb = Rgb::new(28, 28, 32);
const TARGET: Rgb = Rgb::new(214, 48, 40);

fn half_extent(boundary: usize) -> (f64, f64) {
    let z = boundary as f64 + 0.5;
    (f64::from(VIEW_W) / 2.0 * 0.5 / z, f64::from(VIEW_H) / 2.0 * 0.5 / z)
}

/// Screen rectangle `(x0, y0, x1, y1)` of a boundary.
fn frame(boundary: usize) -> (f64, f64, f64, f64) {
    let (cx, cy) = (f64::from(VIEW_W) / 2.0, f64::from(VIEW_H) / 2.0);
    let (hw, hh) = half_extent(boundary);
    (cx - hw, cy - hh, cx + hw, cy + hh)
}

fn fill_box(canvas: &mut Canvas, (x0, y0, x1, y1): (f64, f64, f64, f64), color: Rgb) {
    let (x0, y0) = (x0.round() as i64, y0.round() as i64);
    let (x1, y1) = (x1.round() as i64, y1.round() as i64);
    canvas.fill_rect(x0, y0, x1 - x0, y1 - y0, color);
}

pub fn first_person(state: &MazeState) -> Canvas {
    let mut canvas = Canvas::new(VIEW_W, VIEW_H, CEILING);
    let half = VIEW_H as i64 / 2;
    canvas.fill_rect(0, half, VIEW_W as i64, half, FLOOR);

    let grid = &state.grid;
    let fwd = state.heading.index();
    let left = (fwd + 3) % 4;
    let right = (fwd + 1) % 4;

    // Cells ahead until the first wall.
    let mut cells = vec![state.agent];
    let mut wall_at = None;
    while cells.len() <= DEPTH {
        let last = *cells.last().expect("nonempty");
        match grid.step(last, fwd) {
            Some(n) if !grid.is_wall(n) => cells.push(n),
            _ => {
                wall_at = Some(cells.len());
                break;
            }
        }
    }

    match wall_at {
        Some(k) => fill_box(&mut canvas, frame(k - 1), FRONT),
        None => fill_box(&mut canvas, frame(DEPTH), DARK),
    }

    for k in (1..cells.len().min(DEPTH + 1)).rev() {
        let cell = cells[k];
        let (nx0, ny0, nx1, ny1) = frame(k - 1);
        let (fx0, fy0, fx1, fy1) = frame(k);
        let left_wall = grid.step(cell, left).is_none_or(|n| grid.is_wall(n));
        let right_wall = grid.step(cell, right).is_none_or(|n| grid.is_wall(n));
        if left_wall {
            canvas.fill_convex(&[(nx0, ny0), (fx0, fy0), (fx0, fy1), (nx0, ny1)], SIDE);
        } else {
            fill_box(&mut canvas, (nx0, fy0, fx0, fy1), OPENING);
        }
        if right_wall {
            canvas.fill_convex(&[(nx1, ny0), (fx1, fy0), (fx1, fy1), (nx1, ny1)], SIDE);
        } else {
            fill_box(&mut canvas, (fx1, fy0, nx1, fy1), OPENING);
        }
        if cell == state.target {
            // A panel standing on the floor at the cell centre.
            let z = k as f64;
            let (cx, cy) = (f64::from(VIEW_W) / 2.0, f64::from(VIEW_H) / 2.0);
            let hw = f64::from(VIEW_W) / 2.0 * 0.5 / z * 0.5;
            let floor_y = cy + f64::from(VIEW_H) / 2.0 * 0.5 / z;
            let top = cy - f64::from(VIEW_H) / 2.0 * 0.5 / z * 0.4;
            fill_box(&mut canvas, (cx - hw, top, cx + hw, floor_y), TARGET);
        }
    }

    if state.is_solved() {
        canvas.fill_rect(0, VIEW_H as i64 - 24, VIEW_W as i64, 24, TARGET);
    }
    canvas.text(4, 4, &format!("FACING {}", state.heading.letter()), 1, Rgb::new(20, 20, 20));
    canvas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::maze::{Heading, MazeGrid};

    fn corridor(art: &[&str], agent: (usize, usize), target: (usize, usize), heading: Heading) -> MazeState {
        let walls: Vec<bool> = art.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        MazeState { grid: MazeGrid::from_walls(art[0].len(), art.len(), walls).unwrap(), agent, target, heading }
    }

    #[test]
    fn wall_at_distance_one_fills_view() {
        let s = corridor(&["#####", "#   #", "#####"], (1, 1), (1, 3), Heading::N);
        let view = first_person(&s);
        assert_eq!((view.width(), view.height()), (VIEW_W, VIEW_H));
        // Every pixel below the label band is front-wall colour.
        for y in 16..VIEW_H {
            for x in 0..VIEW_W {
                assert_eq!(view.get(x, y), FRONT, "pixel {x},{y}");
            }
        }
    }

    #[test]
    fn target_visible_down_the_corridor() {
        let s = corridor(&["#######", "#     #", "#######"], (1, 1), (1, 4), Heading::E);
        let view = first_person(&s);
        assert!(view.count_color(TARGET) > 0);
        let away = corridor(&["#######", "#     #", "#######"], (1, 1), (1, 4), Heading::W);
        assert_eq!(first_person(&away).count_color(TARGET), 0);
    }

    #[test]
    fn deterministic() {
        let s = corridor(&["#######", "#  #  #", "#     #", "#######"], (2, 1), (1, 5), Heading::E);
        assert_eq!(first_person(&s), first_person(&s));
    }
}
