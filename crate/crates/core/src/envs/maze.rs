//! Maze 2D (top-down) and Maze 3D (first-person corridor view).
//!
//! The state grid is `(mw + 2) x (mh + 2)` cells: an outer wall ring around
//! an `mw x mh` lattice whose odd-coordinate cells are rooms carved by a
//! randomized depth-first search. The ASCII view wraps the grid in one more
//! `#` border, so a 9x9 maze prints as a 13x13 frame.

use std::any::Any;
use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{fill_template, maze_view, EnvKind, Environment, EXECUTED};
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{Canvas, CharGrid, Rgb, CELL_PX};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const WALL_MESSAGE: &str = "Cannot move into a wall.";

/// Row/column offsets for directions 0 up, 1 right, 2 down, 3 left.
pub const DIRS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

const MAX_SIDE: i64 = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    /// Index into [`DIRS`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Heading::ALL[i % 4]
    }

    /// `0` left, `1` right, `2` around.
    pub fn turned(self, turn: usize) -> Heading {
        let step = match turn {
            0 => 3,
            1 => 1,
            _ => 2,
        };
        Heading::from_index(self.index() + step)
    }

    pub fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
}

impl MazeGrid {
    pub fn from_walls(width: usize, height: usize, walls: Vec<bool>) -> Option<Self> {
        (walls.len() == width * height && width > 0 && height > 0).then_some(Self { width, height, walls })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_wall(&self, (r, c): (usize, usize)) -> bool {
        self.walls[r * self.width + c]
    }

    /// Neighbouring cell in direction `d`, if inside the grid.
    pub fn step(&self, (r, c): (usize, usize), d: usize) -> Option<(usize, usize)> {
        let (dr, dc) = DIRS[d];
        let nr = r.checked_add_signed(dr)?;
        let nc = c.checked_add_signed(dc)?;
        (nr < self.height && nc < self.width).then_some((nr, nc))
    }

    /// Free neighbour in direction `d`.
    pub fn open(&self, cell: (usize, usize), d: usize) -> Option<(usize, usize)> {
        self.step(cell, d).filter(|&n| !self.is_wall(n))
    }

    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        (0..self.height).flat_map(|r| (0..self.width).map(move |c| (r, c))).filter(|&p| !self.is_wall(p)).collect()
    }

    /// Breadth-first distances from `from` over free cells.
    pub fn distances(&self, from: (usize, usize)) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.walls.len()];
        dist[from.0 * self.width + from.1] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(cell) = queue.pop_front() {
            let here = dist[cell.0 * self.width + cell.1].unwrap_or(0);
            for d in 0..4 {
                if let Some(n) = self.open(cell, d) {
                    let slot = &mut dist[n.0 * self.width + n.1];
                    if slot.is_none() {
                        *slot = Some(here + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    fn carve(mw: usize, mh: usize, rng: &mut impl Rng) -> Self {
        let (width, height) = (mw + 2, mh + 2);
        let mut walls = vec![true; width * height];
        let rooms_w = mw.div_ceil(2);
        let rooms_h = mh.div_ceil(2);
        let room = |i: usize, j: usize| (2 * i + 1, 2 * j + 1);
        let mut seen = vec![false; rooms_w * rooms_h];
        let start = (rng.gen_range(0..rooms_h), rng.gen_range(0..rooms_w));
        seen[start.0 * rooms_w + start.1] = true;
        let (r0, c0) = room(start.0, start.1);
        walls[r0 * width + c0] = false;
        let mut stack = vec![start];
        while let Some(&(i, j)) = stack.last() {
            let mut next = Vec::with_capacity(4);
            for (di, dj) in DIRS {
                let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else { continue };
                if ni < rooms_h && nj < rooms_w && !seen[ni * rooms_w + nj] {
                    next.push((ni, nj));
                }
            }
            match next.choose(rng) {
                None => {
                    stack.pop();
                }
                Some(&(ni, nj)) => {
                    seen[ni * rooms_w + nj] = true;
                    let (ra, ca) = room(i, j);
                    let (rb, cb) = room(ni, nj);
                    walls[((ra + rb) / 2) * width + (ca + cb) / 2] = false;
                    walls[rb * width + cb] = false;
                    stack.push((ni, nj));
                }
            }
        }
        Self { width, height, walls }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MazeState {
    pub grid: MazeGrid,
    pub agent: (usize, usize),
    pub target: (usize, usize),
    /// Only meaningful for Maze 3D.
    pub heading: Heading,
}

impl MazeState {
    pub fn is_solved(&self) -> bool {
        self.agent == self.target
    }

    /// Moves the agent one cell in direction `d`.
    pub fn move_dir(&mut self, d: usize) -> Result<(), &'static str> {
        match self.grid.open(self.agent, d) {
            Some(n) => {
                self.agent = n;
                Ok(())
            }
            None => Err(WALL_MESSAGE),
        }
    }

    /// `#` wall, space free, `A` agent, `T` target, `@` agent on target, with
    /// an extra `#` border around the grid.
    pub fn ascii(&self) -> CharGrid {
        let w = self.grid.width + 2;
        let mut rows = vec!["#".repeat(w)];
        for r in 0..self.grid.height {
            let mut row = String::with_capacity(w);
            row.push('#');
            for c in 0..self.grid.width {
                let p = (r, c);
                row.push(if p == self.agent && p == self.target {
                    '@'
                } else if p == self.agent {
                    'A'
                } else if p == self.target {
                    'T'
                } else if self.grid.is_wall(p) {
                    '#'
                } else {
                    ' '
                });
            }
            row.push('#');
            rows.push(row);
        }
        rows.push("#".repeat(w));
        CharGrid::new(rows).expect("maze rows are rectangular")
    }

    /// Inverse of [`MazeState::ascii`]; the heading is not part of the text
    /// view and comes back as north.
    pub fn parse_ascii(grid: &CharGrid) -> Option<MazeState> {
        let (h, w) = (grid.height().checked_sub(2)?, grid.width().checked_sub(2)?);
        let mut walls = Vec::with_capacity(w * h);
        let (mut agent, mut target) = (None, None);
        for r in 0..grid.height() {
            for c in 0..grid.width() {
                let ch = grid.at(r, c);
                let border = r == 0 || c == 0 || r == grid.height() - 1 || c == grid.width() - 1;
                if border {
                    if ch != '#' {
                        return None;
                    }
                    continue;
                }
                let p = (r - 1, c - 1);
                match ch {
                    '#' => walls.push(true),
                    ' ' => walls.push(false),
                    'A' => {
                        agent = Some(p);
                        walls.push(false)
                    }
                    'T' => {
                        target = Some(p);
                        walls.push(false)
                    }
                    '@' => {
                        agent = Some(p);
                        target = Some(p);
                        walls.push(false)
                    }
                    _ => return None,
                }
            }
        }
        Some(MazeState {
            grid: MazeGrid::from_walls(w, h, walls)?,
            agent: agent?,
            target: target?,
            heading: Heading::N,
        })
    }

    /// Top-down raster, 32 px per cell.
    pub fn raster(&self) -> Canvas {
        let g = &self.grid;
        let px = CELL_PX as i64;
        let mut canvas = Canvas::new(g.width as u32 * CELL_PX, g.height as u32 * CELL_PX, FLOOR);
        for r in 0..g.height {
            for c in 0..g.width {
                if g.is_wall((r, c)) {
                    canvas.fill_rect(c as i64 * px, r as i64 * px, px, px, WALL);
                }
            }
        }
        let (tr, tc) = self.target;
        canvas.fill_rect(tc as i64 * px + 4, tr as i64 * px + 4, px - 8, px - 8, TARGET);
        let (ar, ac) = self.agent;
        let half = px as f64 / 2.0;
        canvas.fill_circle(ac as f64 * px as f64 + half, ar as f64 * px as f64 + half, 10.0, AGENT);
        canvas
    }

    pub fn canonical(&self, three_d: bool) -> String {
        let rows: Vec<String> = (0..self.grid.height)
            .map(|r| (0..self.grid.width).map(|c| if self.grid.is_wall((r, c)) { '#' } else { '.' }).collect())
            .collect();
        let mut out = format!(
            "maze{};{}x{};{};agent={},{};target={},{}",
            if three_d { "3d" } else { "2d" },
            self.grid.width,
            self.grid.height,
            rows.join("/"),
            self.agent.0,
            self.agent.1,
            self.target.0,
            self.target.1
        );
        if three_d {
            out.push_str(&format!(";heading={}", self.heading.letter()));
        }
        out
    }
}

const FLOOR: Rgb = Rgb::new(236, 236, 232);
const WALL: Rgb = Rgb::new(60, 62, 74);
const TARGET: Rgb = Rgb::new(214, 48, 40);
const AGENT: Rgb = Rgb::new(40, 90, 220);

#[derive(Debug, Clone, PartialEq)]
pub struct MazeParams {
    pub three_d: bool,
    pub mw: usize,
    pub mh: usize,
    /// Longest allowed shortest plan (moves, plus turns in 3D).
    pub max_path: usize,
}

impl MazeParams {
    pub fn resolve(three_d: bool, difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let env = if three_d { "maze3d" } else { "maze2d" };
        let r = ParamReader::new(env, overrides, &["mw", "mh", "max_path"])?;
        let (ew, hw) = if three_d { (7, 9) } else { (9, 11) };
        let side = |key: &str, default: i64| -> Result<usize, ConfigError> {
            let v = r.int(key, default)?;
            if v < 5 || v % 2 == 0 || v > MAX_SIDE {
                return Err(out_of_range(key, v, "odd integer between 5 and 41"));
            }
            Ok(v as usize)
        };
        let mw = side("mw", difficulty.pick(ew, hw))?;
        let mh = side("mh", difficulty.pick(ew, hw))?;
        let max_path = r.int("max_path", difficulty.default_max_steps() as i64 - 1)?;
        let threshold = ((mw + mh) / 2) as i64;
        if max_path < threshold {
            return Err(out_of_range("max_path", max_path, "at least (mw + mh) / 2"));
        }
        Ok(Self { three_d, mw, mh, max_path: max_path as usize })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("mw".into(), self.mw.into());
        m.insert("mh".into(), self.mh.into());
        m.insert("max_path".into(), self.max_path.into());
        m
    }

    /// Minimum shortest-path distance between agent and target.
    pub fn min_distance(&self) -> usize {
        (self.mw + self.mh) / 2
    }
}

/// Shortest 3D plan (moves and turns) from every `(cell, heading)` to any
/// state standing on `target`, computed backwards from the goal.
pub(crate) fn plan_lengths_3d(grid: &MazeGrid, from: (usize, usize), heading: Heading) -> Vec<Option<usize>> {
    let idx = |(r, c): (usize, usize), h: Heading| (r * grid.width + c) * 4 + h.index();
    let mut dist = vec![None; grid.walls.len() * 4];
    dist[idx(from, heading)] = Some(0);
    let mut queue = VecDeque::from([(from, heading)]);
    while let Some((cell, h)) = queue.pop_front() {
        let here = dist[idx(cell, h)].unwrap_or(0);
        let mut next = vec![(cell, h.turned(0)), (cell, h.turned(1)), (cell, h.turned(2))];
        if let Some(n) = grid.open(cell, h.index()) {
            next.push((n, h));
        }
        for (c, hh) in next {
            let slot = &mut dist[idx(c, hh)];
            if slot.is_none() {
                *slot = Some(here + 1);
                queue.push_back((c, hh));
            }
        }
    }
    dist
}

fn generate_state(p: &MazeParams, rng: &mut impl Rng) -> Option<MazeState> {
    let grid = MazeGrid::carve(p.mw, p.mh, rng);
    let free = grid.free_cells();
    for _ in 0..8 {
        let agent = *free.choose(rng)?;
        let heading = if p.three_d { Heading::from_index(rng.gen_range(0..4)) } else { Heading::N };
        let dist = grid.distances(agent);
        let plan = p.three_d.then(|| plan_lengths_3d(&grid, agent, heading));
        let candidates: Vec<(usize, usize)> = free
            .iter()
            .copied()
            .filter(|&(r, c)| {
                let Some(d) = dist[r * grid.width + c] else { return false };
                let len = match &plan {
                    None => d,
                    Some(pl) => (0..4).filter_map(|h| pl[(r * grid.width + c) * 4 + h]).min().unwrap_or(usize::MAX),
                };
                d >= p.min_distance() && len <= p.max_path
            })
            .collect();
        if let Some(&target) = candidates.choose(rng) {
            return Some(MazeState { grid, agent, target, heading });
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct MazeEnv {
    params: MazeParams,
    state: MazeState,
    schemas: SchemaSet,
}

impl MazeEnv {
    pub fn generate(params: MazeParams, seed: u64) -> Result<Self, ConfigError> {
        let mut rng = crate::rng::stream(seed, if params.three_d { "maze3d/generate" } else { "maze2d/generate" });
        for _ in 0..200 {
            if let Some(state) = generate_state(&params, &mut rng) {
                return Ok(Self::from_state(params, state));
            }
        }
        Err(ConfigError::Generation("no agent/target placement satisfies the distance limits".into()))
    }

    pub fn from_state(params: MazeParams, state: MazeState) -> Self {
        let schemas = if params.three_d {
            SchemaSet::new(vec![
                PayloadSchema::new(
                    "move",
                    vec![ArgSpec::int("direction", 0, 0)],
                    "move(d)",
                    "d must be 0; step one cell forward in the direction you are facing",
                ),
                PayloadSchema::new(
                    "turn",
                    vec![ArgSpec::int("turn direction", 0, 2)],
                    "turn(d)",
                    "turn in place; d = 0 left, 1 right, 2 around",
                ),
            ])
        } else {
            SchemaSet::new(vec![PayloadSchema::new(
                "move",
                vec![ArgSpec::int("direction", 0, 3)],
                "move(d)",
                "move one cell; d = 0 up, 1 right, 2 down, 3 left",
            )])
        };
        Self { params, state, schemas }
    }

    pub fn state(&self) -> &MazeState {
        &self.state
    }

    pub fn maze_params(&self) -> &MazeParams {
        &self.params
    }

    pub fn is_3d(&self) -> bool {
        self.params.three_d
    }
}

impl Environment for MazeEnv {
    fn kind(&self) -> EnvKind {
        if self.params.three_d {
            EnvKind::Maze3d
        } else {
            EnvKind::Maze2d
        }
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        let vars = [("mw", self.params.mw.to_string()), ("mh", self.params.mh.to_string())];
        if self.params.three_d {
            fill_template(include_str!("../../resources/instructions/maze3d.txt"), &vars)
        } else {
            fill_template(include_str!("../../resources/instructions/maze2d.txt"), &vars)
        }
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, name: &str, args: &[Value]) -> String {
        let arg = args.first().and_then(Value::as_i64).unwrap_or(0) as usize;
        let result = match (name, self.params.three_d) {
            ("move", false) => self.state.move_dir(arg),
            ("move", true) => self.state.move_dir(self.state.heading.index()),
            ("turn", true) => {
                self.state.heading = self.state.heading.turned(arg);
                Ok(())
            }
            _ => Err("unsupported action"),
        };
        match result {
            Ok(()) => EXECUTED.to_string(),
            Err(msg) => msg.to_string(),
        }
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        if self.params.three_d {
            maze_view::first_person(&self.state)
        } else {
            self.state.raster()
        }
    }

    fn render_ascii(&self) -> Option<CharGrid> {
        (!self.params.three_d).then(|| self.state.ascii())
    }

    fn goal_render(&self) -> Option<Canvas> {
        let mut solved = self.state.clone();
        solved.agent = solved.target;
        if self.params.three_d {
            // Face along an open corridor so the view is informative.
            if let Some(h) = Heading::ALL.into_iter().find(|h| solved.grid.open(solved.target, h.index()).is_some()) {
                solved.heading = h;
            }
            Some(maze_view::first_person(&solved))
        } else {
            Some(solved.raster())
        }
    }

    fn goal_ascii(&self) -> Option<CharGrid> {
        let mut solved = self.state.clone();
        solved.agent = solved.target;
        (!self.params.three_d).then(|| solved.ascii())
    }

    fn canonical_state(&self) -> String {
        self.state.canonical(self.params.three_d)
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::maze::solve(self, opts)
    }

    fn clone_box(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn params(mw: usize) -> MazeParams {
        MazeParams { three_d: false, mw, mh: mw, max_path: 200 }
    }

    #[test]
    fn carved_maze_is_a_tree() {
        for seed in 0..30 {
            for side in [5, 7, 9] {
                let g = MazeGrid::carve(side, side, &mut stream(seed, "t"));
                let free = g.free_cells();
                let mut edges = 0;
                for &p in &free {
                    edges += [1, 2].iter().filter(|&&d| g.open(p, d).is_some()).count();
                }
                assert_eq!(edges, free.len() - 1);
                let dist = g.distances(free[0]);
                assert!(free.iter().all(|&(r, c)| dist[r * g.width() + c].is_some()));
                // outer ring stays solid
                assert!((0..g.width()).all(|c| g.is_wall((0, c)) && g.is_wall((g.height() - 1, c))));
            }
        }
    }

    #[test]
    fn generation_respects_distance() {
        for seed in 0..20 {
            let p = MazeParams::resolve(false, Difficulty::Easy, &ParamMap::new()).unwrap();
            let env = MazeEnv::generate(p.clone(), seed).unwrap();
            let s = env.state();
            let d = s.grid.distances(s.agent)[s.target.0 * s.grid.width() + s.target.1].unwrap();
            assert!(d >= 9 && d <= p.max_path);
            assert!(!env.is_solved());
        }
    }

    #[test]
    fn ascii_frame_is_thirteen_wide_for_nine() {
        let env =
            MazeEnv::generate(MazeParams::resolve(false, Difficulty::Easy, &ParamMap::new()).unwrap(), 7).unwrap();
        let grid = env.render_ascii().unwrap();
        assert_eq!((grid.width(), grid.height()), (13, 13));
        assert_eq!(MazeState::parse_ascii(&grid).unwrap(), env.state().clone());
    }

    #[test]
    fn tiny_golden() {
        // 5x5 lattice carved by hand: an S-shaped corridor.
        let art = ["#######", "#A    #", "##### #", "#     #", "# #####", "#    T#", "#######"];
        let walls: Vec<bool> = art.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        let state = MazeState {
            grid: MazeGrid::from_walls(7, 7, walls).unwrap(),
            agent: (1, 1),
            target: (5, 5),
            heading: Heading::N,
        };
        let expected = [
            "#########",
            "#########",
            "##A    ##",
            "###### ##",
            "##     ##",
            "## ######",
            "##    T##",
            "#########",
            "#########",
        ];
        assert_eq!(crate::render::ascii_frame(&state.ascii()), expected.join("\n"));
    }

    #[test]
    fn moves_and_walls() {
        let mut env = MazeEnv::generate(params(9), 3).unwrap();
        let start = env.state().agent;
        let open = (0..4).find(|&d| env.state().grid.open(start, d).is_some()).unwrap();
        let blocked = (0..4).find(|&d| env.state().grid.open(start, d).is_none());
        assert_eq!(env.apply("move", &[Value::Int(open as i64)]), EXECUTED);
        assert_eq!(env.apply("move", &[Value::Int(((open + 2) % 4) as i64)]), EXECUTED);
        assert_eq!(env.state().agent, start);
        if let Some(d) = blocked {
            assert_eq!(env.apply("move", &[Value::Int(d as i64)]), WALL_MESSAGE);
            assert_eq!(env.state().agent, start);
        }
    }

    #[test]
    fn turns() {
        assert_eq!(Heading::N.turned(1), Heading::E);
        assert_eq!(Heading::N.turned(0), Heading::W);
        assert_eq!(Heading::E.turned(2), Heading::W);
        for h in Heading::ALL {
            assert_eq!(h.turned(0).turned(1), h);
        }
    }

    #[test]
    fn params_validated() {
        let mut o = ParamMap::new();
        o.insert("mw".into(), 8.into());
        assert!(MazeParams::resolve(false, Difficulty::Easy, &o).is_err());
        let hard = MazeParams::resolve(true, Difficulty::Hard, &ParamMap::new()).unwrap();
        assert_eq!((hard.mw, hard.mh), (9, 9));
    }
}
