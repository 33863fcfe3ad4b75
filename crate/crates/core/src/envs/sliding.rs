//! Sliding Block: a 4-wide, 5-tall board of polyomino blocks with two empty
//! cells. The goal is to reproduce a target arrangement.

use std::any::Any;

use rand::seq::SliceRandom;
use rand::Rng;

use super::maze::DIRS;
use super::{fill_template, EnvKind, Environment, EXECUTED};
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{compose_side_by_side, Canvas, CharGrid, Rgb, BACKGROUND, CELL_PX, INK};
use crate::solvers::{sliding::shortest_solution, SolveError, SolverOptions, SolverPlan};

pub const ROWS: usize = 5;
pub const COLS: usize = 4;
pub const CELLS: usize = ROWS * COLS;
pub const EMPTY: u8 = u8::MAX;
pub const MAX_BLOCKS: usize = 10;
pub const BLOCKED: &str = "blocked: cells occupied";
pub const EDGE: &str = "blocked: board edge";

/// Row-major cell labels; [`EMPTY`] marks a free cell.
pub type Board = [u8; CELLS];

/// Slides block `b` one cell in direction `d`.
pub fn slide(board: &Board, b: u8, d: usize) -> Result<Board, &'static str> {
    let (dr, dc) = DIRS[d];
    let mut next = *board;
    let mut found = false;
    for (i, &v) in board.iter().enumerate() {
        if v != b {
            continue;
        }
        found = true;
        let (r, c) = ((i / COLS) as isize + dr, (i % COLS) as isize + dc);
        if r < 0 || c < 0 || r >= ROWS as isize || c >= COLS as isize {
            return Err(EDGE);
        }
        let j = r as usize * COLS + c as usize;
        if board[j] != EMPTY && board[j] != b {
            return Err(BLOCKED);
        }
    }
    if !found {
        return Err("no such block on the board");
    }
    for v in next.iter_mut() {
        if *v == b {
            *v = EMPTY;
        }
    }
    for (i, &v) in board.iter().enumerate() {
        if v == b {
            let (r, c) = ((i / COLS) as isize + dr, (i % COLS) as isize + dc);
            next[r as usize * COLS + c as usize] = b;
        }
    }
    Ok(next)
}

/// Every legal `(block, direction)` on `board`.
pub fn legal_moves(board: &Board, blocks: u8) -> Vec<(u8, usize)> {
    let mut out = Vec::new();
    for b in 0..blocks {
        for d in 0..4 {
            if slide(board, b, d).is_ok() {
                out.push((b, d));
            }
        }
    }
    out
}

fn board_rows(board: &Board) -> Vec<String> {
    (0..ROWS)
        .map(|r| {
            (0..COLS)
                .map(|c| match board[r * COLS + c] {
                    EMPTY => '.',
                    v => char::from(b'0' + v),
                })
                .collect()
        })
        .collect()
}

fn parse_row(text: &str, out: &mut Vec<u8>) -> Option<()> {
    for ch in text.chars() {
        out.push(match ch {
            '.' => EMPTY,
            '0'..='9' => ch as u8 - b'0',
            _ => return None,
        });
    }
    Some(())
}

/// Random tiling of the board with connected blocks of 1 to 4 cells, leaving
/// two cells empty.
fn random_tiling(rng: &mut impl Rng) -> Option<(Board, u8)> {
    let mut board = [EMPTY; CELLS];
    let mut assigned = [false; CELLS];
    let mut cells: Vec<usize> = (0..CELLS).collect();
    cells.shuffle(rng);
    for &e in &cells[..2] {
        assigned[e] = true;
    }
    let mut next_id = 0u8;
    while let Some(start) = (0..CELLS).find(|&i| !assigned[i]) {
        if next_id as usize >= MAX_BLOCKS {
            return None;
        }
        let size = *[1, 1, 1, 1, 2, 2, 2, 2, 3, 4].choose(rng).expect("nonempty");
        let mut block = vec![start];
        assigned[start] = true;
        while block.len() < size {
            let mut frontier = Vec::new();
            for &i in &block {
                for (dr, dc) in DIRS {
                    let (r, c) = ((i / COLS) as isize + dr, (i % COLS) as isize + dc);
                    if r >= 0 && c >= 0 && r < ROWS as isize && c < COLS as isize {
                        let j = r as usize * COLS + c as usize;
                        if !assigned[j] && !frontier.contains(&j) {
                            frontier.push(j);
                        }
                    }
                }
            }
            let Some(&j) = frontier.choose(rng) else { break };
            assigned[j] = true;
            block.push(j);
        }
        for i in block {
            board[i] = next_id;
        }
        next_id += 1;
    }
    // Random labels so ids carry no positional information.
    let mut labels: Vec<u8> = (0..next_id).collect();
    labels.shuffle(rng);
    for v in board.iter_mut() {
        if *v != EMPTY {
            *v = labels[*v as usize];
        }
    }
    Some((board, next_id))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlidingState {
    pub board: Board,
    pub target: Board,
    pub blocks: u8,
}

impl SlidingState {
    pub fn is_solved(&self) -> bool {
        self.board == self.target
    }

    /// `Target Current` header, a dashed rule, then `TTTT | CCCC` rows.
    pub fn ascii(&self) -> CharGrid {
        let mut rows = vec!["Target Current".to_string(), "-".repeat(11)];
        for (t, c) in board_rows(&self.target).into_iter().zip(board_rows(&self.board)) {
            rows.push(format!("{t} | {c}"));
        }
        CharGrid::padded(rows).expect("ascii rows")
    }

    pub fn parse_ascii(grid: &CharGrid) -> Option<SlidingState> {
        let rows = grid.rows();
        if rows.len() != ROWS + 2 || rows[0].trim_end() != "Target Current" || rows[1].trim_end() != "-".repeat(11) {
            return None;
        }
        let (mut target, mut board) = (Vec::new(), Vec::new());
        for row in &rows[2..] {
            let (t, c) = row.trim_end().split_once(" | ")?;
            if t.len() != COLS || c.len() != COLS {
                return None;
            }
            parse_row(t, &mut target)?;
            parse_row(c, &mut board)?;
        }
        let blocks = target.iter().filter(|&&v| v != EMPTY).max().map_or(0, |m| m + 1);
        Some(SlidingState { board: board.try_into().ok()?, target: target.try_into().ok()?, blocks })
    }

    fn panel(board: &Board) -> Canvas {
        let px = CELL_PX as i64;
        let mut canvas = Canvas::new(COLS as u32 * CELL_PX, ROWS as u32 * CELL_PX, BACKGROUND);
        for (i, &v) in board.iter().enumerate() {
            let (x, y) = ((i % COLS) as i64 * px, (i / COLS) as i64 * px);
            if v == EMPTY {
                canvas.stroke_rect(x, y, px, px, Rgb::new(200, 200, 196));
                continue;
            }
            canvas.fill_rect(x, y, px, px, PALETTE[v as usize % PALETTE.len()]);
            // Seams between different blocks.
            let (r, c) = (i / COLS, i % COLS);
            if c + 1 < COLS && board[i + 1] != v {
                canvas.fill_rect(x + px - 1, y, 1, px, INK);
            }
            if c > 0 && board[i - 1] != v {
                canvas.fill_rect(x, y, 1, px, INK);
            }
            if r + 1 < ROWS && board[i + COLS] != v {
                canvas.fill_rect(x, y + px - 1, px, 1, INK);
            }
            if r > 0 && board[i - COLS] != v {
                canvas.fill_rect(x, y, px, 1, INK);
            }
            canvas.text(x + 11, y + 9, &v.to_string(), 2, INK);
        }
        canvas.stroke_rect(0, 0, COLS as i64 * px, ROWS as i64 * px, INK);
        canvas
    }

    pub fn raster(&self) -> Canvas {
        let target = Self::panel(&self.target);
        let current = Self::panel(&self.board);
        compose_side_by_side(&[&target, &current], &["Target", "Current"], 16).expect("equal heights")
    }
}

const PALETTE: [Rgb; 10] = [
    Rgb::new(230, 159, 0),
    Rgb::new(86, 180, 233),
    Rgb::new(0, 158, 115),
    Rgb::new(240, 228, 66),
    Rgb::new(204, 121, 167),
    Rgb::new(213, 94, 0),
    Rgb::new(150, 150, 230),
    Rgb::new(170, 210, 120),
    Rgb::new(200, 170, 130),
    Rgb::new(120, 200, 200),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingParams {
    /// Number of random shuffle moves.
    pub sm: usize,
    /// Longest allowed shortest solution.
    pub max_solution: usize,
}

impl SlidingParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("sliding_block", overrides, &["sm", "max_solution"])?;
        let sm = r.int("sm", difficulty.pick(30, 90))?;
        if !(1..=10_000).contains(&sm) {
            return Err(out_of_range("sm", sm, "between 1 and 10000"));
        }
        let max_solution = r.int("max_solution", difficulty.default_max_steps() as i64 - 1)?;
        if !(1..=60).contains(&max_solution) {
            return Err(out_of_range("max_solution", max_solution, "between 1 and 60"));
        }
        Ok(Self { sm: sm as usize, max_solution: max_solution as usize })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("sm".into(), self.sm.into());
        m.insert("max_solution".into(), self.max_solution.into());
        m
    }
}

#[derive(Debug, Clone)]
pub struct SlidingEnv {
    params: SlidingParams,
    state: SlidingState,
    /// Inverse of the generating shuffle; a guaranteed (not minimal) solution.
    witness: Vec<(u8, usize)>,
    schemas: SchemaSet,
}

impl SlidingEnv {
    pub fn generate(params: SlidingParams, seed: u64) -> Result<Self, ConfigError> {
        let mut rng = crate::rng::stream(seed, "sliding_block/generate");
        for _ in 0..2000 {
            let Some((target, blocks)) = random_tiling(&mut rng) else { continue };
            let mut board = target;
            let mut last: Option<(u8, usize)> = None;
            let mut shuffle = Vec::with_capacity(params.sm);
            for _ in 0..params.sm {
                let options: Vec<(u8, usize)> =
                    legal_moves(&board, blocks).into_iter().filter(|&(b, d)| last != Some((b, (d + 2) % 4))).collect();
                let Some(&(b, d)) = options.choose(&mut rng) else { break };
                board = slide(&board, b, d).expect("legal move");
                shuffle.push((b, d));
                last = Some((b, d));
            }
            if board == target {
                continue;
            }
            let state = SlidingState { board, target, blocks };
            if shortest_solution(&state, params.max_solution).is_none() {
                continue;
            }
            let witness = shuffle.iter().rev().map(|&(b, d)| (b, (d + 2) % 4)).collect();
            return Ok(Self::from_parts(params, state, witness));
        }
        Err(ConfigError::Generation("no shuffle within the solution-length limit".into()))
    }

    pub fn from_parts(params: SlidingParams, state: SlidingState, witness: Vec<(u8, usize)>) -> Self {
        let max_block = i64::from(state.blocks.max(1)) - 1;
        let schemas = SchemaSet::new(vec![PayloadSchema::new(
            "move",
            vec![ArgSpec::int("block", 0, max_block), ArgSpec::int("direction", 0, 3)],
            "move(b, d)",
            "slide block b one cell; d = 0 up, 1 right, 2 down, 3 left",
        )]);
        Self { params, state, witness, schemas }
    }

    pub fn state(&self) -> &SlidingState {
        &self.state
    }

    /// The inverse of the generating shuffle.
    pub fn witness(&self) -> &[(u8, usize)] {
        &self.witness
    }
}

impl Environment for SlidingEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::SlidingBlock
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        fill_template(
            include_str!("../../resources/instructions/sliding_block.txt"),
            &[("max_block", (self.state.blocks.max(1) - 1).to_string())],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, _name: &str, args: &[Value]) -> String {
        let b = args.first().and_then(Value::as_i64).unwrap_or(0) as u8;
        let d = args.get(1).and_then(Value::as_i64).unwrap_or(0) as usize;
        match slide(&self.state.board, b, d) {
            Ok(next) => {
                self.state.board = next;
                EXECUTED.to_string()
            }
            Err(msg) => msg.to_string(),
        }
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        self.state.raster()
    }

    fn render_ascii(&self) -> Option<CharGrid> {
        Some(self.state.ascii())
    }

    fn goal_render(&self) -> Option<Canvas> {
        let mut solved = self.state.clone();
        solved.board = solved.target;
        Some(solved.raster())
    }

    fn goal_ascii(&self) -> Option<CharGrid> {
        let mut solved = self.state.clone();
        solved.board = solved.target;
        Some(solved.ascii())
    }

    fn canonical_state(&self) -> String {
        format!(
            "sliding;target={};current={}",
            board_rows(&self.state.target).join("/"),
            board_rows(&self.state.board).join("/")
        )
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::sliding::solve(self, opts)
    }

    fn clone_box(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
