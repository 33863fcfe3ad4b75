//! Patch Reassembly: place polyomino patches so that they tile an R x C
//! grid exactly.

use std::any::Any;

use rand::seq::SliceRandom;
use rand::Rng;

use super::maze::DIRS;
use super::{fill_template, EnvKind, Environment, EXECUTED};
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{Canvas, CharGrid, Rgb, BACKGROUND, CELL_PX, INK};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const CANNOT_PLACE: &str = "cannot place: overlap or out of bounds";
pub const NOT_ON_GRID: &str = "patch not on grid";
pub const PARKED_HEADER: &str = "--- Parked Patches ---";

/// Cell offsets relative to the anchor (topmost, then leftmost cell), which
/// is always `(0, 0)` and listed first; the rest are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(Vec<(i32, i32)>);

impl Shape {
    /// Normalises absolute cells into anchor-relative offsets.
    pub fn from_cells(cells: &[(i32, i32)]) -> Option<Shape> {
        let anchor = *cells.iter().min()?;
        let mut offsets: Vec<(i32, i32)> = cells.iter().map(|&(r, c)| (r - anchor.0, c - anchor.1)).collect();
        offsets.sort();
        offsets.dedup();
        Some(Shape(offsets))
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rows and columns spanned: `(rows, min_col, max_col)`.
    fn bounds(&self) -> (i32, i32, i32) {
        let rows = self.0.iter().map(|o| o.0).max().unwrap_or(0) + 1;
        let lo = self.0.iter().map(|o| o.1).min().unwrap_or(0);
        let hi = self.0.iter().map(|o| o.1).max().unwrap_or(0);
        (rows, lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatchState {
    pub rows: usize,
    pub cols: usize,
    pub shapes: Vec<Shape>,
    /// Anchor of each placed patch; `None` when parked.
    pub placed: Vec<Option<(usize, usize)>>,
}

impl PatchState {
    /// Absolute cells of patch `p` anchored at `(r, c)`, if all in bounds.
    pub fn cells_at(&self, p: usize, (r, c): (usize, usize)) -> Option<Vec<(usize, usize)>> {
        self.shapes[p]
            .offsets()
            .iter()
            .map(|&(dr, dc)| {
                let (rr, cc) = (r as i32 + dr, c as i32 + dc);
                (rr >= 0 && cc >= 0 && (rr as usize) < self.rows && (cc as usize) < self.cols)
                    .then_some((rr as usize, cc as usize))
            })
            .collect()
    }

    /// Patch id covering each cell.
    pub fn occupancy(&self) -> Vec<Option<usize>> {
        let mut occ = vec![None; self.rows * self.cols];
        for (p, anchor) in self.placed.iter().enumerate() {
            if let Some(a) = anchor {
                for (r, c) in self.cells_at(p, *a).unwrap_or_default() {
                    occ[r * self.cols + c] = Some(p);
                }
            }
        }
        occ
    }

    /// Whether `p` fits at `anchor` ignoring its own current cells.
    pub fn fits(&self, p: usize, anchor: (usize, usize)) -> bool {
        let occ = self.occupancy();
        match self.cells_at(p, anchor) {
            None => false,
            Some(cells) => cells.iter().all(|&(r, c)| occ[r * self.cols + c].is_none_or(|q| q == p)),
        }
    }

    pub fn place(&mut self, p: usize, anchor: (usize, usize)) -> Result<(), &'static str> {
        if self.fits(p, anchor) {
            self.placed[p] = Some(anchor);
            Ok(())
        } else {
            Err(CANNOT_PLACE)
        }
    }

    pub fn remove(&mut self, p: usize) -> Result<(), &'static str> {
        match self.placed[p].take() {
            Some(_) => Ok(()),
            None => Err(NOT_ON_GRID),
        }
    }

    /// Every cell covered.
    pub fn is_solved(&self) -> bool {
        self.occupancy().iter().all(Option::is_some)
    }

    pub fn ascii(&self) -> CharGrid {
        let occ = self.occupancy();
        let mut header = String::from("   ");
        for c in 0..self.cols {
            header.push_str(&format!(" {c:<2}"));
        }
        let mut rows = vec![header, format!("  {}", "-".repeat(3 * self.cols + 1))];
        for r in 0..self.rows {
            let mut line = format!("{r} |");
            for c in 0..self.cols {
                let ch = occ[r * self.cols + c].map_or('.', |p| char::from(b'0' + p as u8));
                line.push_str(&format!(" {ch} "));
            }
            rows.push(line);
        }
        rows.push(String::new());
        rows.push(PARKED_HEADER.to_string());
        for (p, shape) in self.shapes.iter().enumerate() {
            if self.placed[p].is_some() {
                continue;
            }
            rows.push(String::new());
            rows.push(format!("Patch {p}:"));
            let (h, lo, hi) = shape.bounds();
            for dr in 0..h {
                let mut line = String::from("  ");
                for dc in lo..=hi {
                    line.push(if (dr, dc) == (0, 0) {
                        '*'
                    } else if shape.offsets().contains(&(dr, dc)) {
                        char::from(b'0' + p as u8)
                    } else {
                        ' '
                    });
                }
                rows.push(line);
            }
        }
        CharGrid::padded(rows).expect("ascii rows")
    }

    /// Inverse of [`PatchState::ascii`].
    pub fn parse_ascii(grid: &CharGrid) -> Option<PatchState> {
        let rows: Vec<&str> = grid.rows().iter().map(|r| r.trim_end()).collect();
        let split = rows.iter().position(|r| *r == PARKED_HEADER)?;
        let grid_rows = &rows[2..split.checked_sub(1)?];
        let n_rows = grid_rows.len();
        let n_cols = rows[0].split_whitespace().count();
        let mut cells: Vec<Vec<(i32, i32)>> = Vec::new();
        for (r, line) in grid_rows.iter().enumerate() {
            let body = line.split_once('|')?.1;
            let labels: Vec<&str> = body.split_whitespace().collect();
            if labels.len() != n_cols {
                return None;
            }
            for (c, label) in labels.iter().enumerate() {
                if *label == "." {
                    continue;
                }
                let p: usize = label.parse().ok()?;
                if cells.len() <= p {
                    cells.resize(p + 1, Vec::new());
                }
                cells[p].push((r as i32, c as i32));
            }
        }
        let mut parked: Vec<(usize, Vec<(i32, i32)>)> = Vec::new();
        let mut i = split + 1;
        while i < rows.len() {
            if let Some(rest) = rows[i].strip_prefix("Patch ") {
                let p: usize = rest.strip_suffix(':')?.parse().ok()?;
                let mut shape = Vec::new();
                let mut dr = 0;
                i += 1;
                while i < rows.len() && !rows[i].is_empty() {
                    for (dc, ch) in rows[i].chars().enumerate().skip(2) {
                        if ch == '*' || ch.is_ascii_digit() {
                            shape.push((dr, dc as i32));
                        }
                    }
                    dr += 1;
                    i += 1;
                }
                parked.push((p, shape));
            } else {
                i += 1;
            }
        }
        let total = cells.len().max(parked.iter().map(|(p, _)| p + 1).max().unwrap_or(0));
        let mut shapes = vec![Shape(Vec::new()); total];
        let mut placed = vec![None; total];
        for (p, cs) in cells.iter().enumerate() {
            if cs.is_empty() {
                continue;
            }
            let anchor = *cs.iter().min()?;
            shapes[p] = Shape::from_cells(cs)?;
            placed[p] = Some((anchor.0 as usize, anchor.1 as usize));
        }
        for (p, cs) in parked {
            shapes[p] = Shape::from_cells(&cs)?;
        }
        if shapes.iter().any(Shape::is_empty) {
            return None;
        }
        Some(PatchState { rows: n_rows, cols: n_cols, shapes, placed })
    }

    fn draw_shape(canvas: &mut Canvas, shape: &Shape, color: Rgb, x: i64, y: i64, cell: i64, mark_anchor: bool) {
        let (_, lo, _) = shape.bounds();
        for &(dr, dc) in shape.offsets() {
            let (cx, cy) = (x + i64::from(dc - lo) * cell, y + i64::from(dr) * cell);
            canvas.fill_rect(cx, cy, cell, cell, color);
            canvas.stroke_rect(cx, cy, cell, cell, INK);
        }
        if mark_anchor {
            let (cx, cy) = (x + i64::from(-lo) * cell, y);
            canvas.fill_circle(cx as f64 + cell as f64 / 2.0, cy as f64 + cell as f64 / 2.0, cell as f64 / 5.0, INK);
        }
    }

    /// Board on top, parked-patch tray of the same size below.
    pub fn raster(&self) -> Canvas {
        let px = i64::from(CELL_PX);
        let (bw, bh) = (self.cols as i64 * px, self.rows as i64 * px);
        let mut canvas = Canvas::new(bw as u32, (2 * bh + 8) as u32, BACKGROUND);
        let occ = self.occupancy();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (x, y) = (c as i64 * px, r as i64 * px);
                match occ[r * self.cols + c] {
                    Some(p) => {
                        canvas.fill_rect(x, y, px, px, PALETTE[p % PALETTE.len()]);
                        canvas.text(x + 13, y + 12, &p.to_string(), 1, INK);
                    }
                    None => canvas.stroke_rect(x, y, px, px, Rgb::new(200, 200, 196)),
                }
            }
        }
        canvas.stroke_rect(0, 0, bw, bh, INK);
        canvas.fill_rect(0, bh, bw, 8, INK);

        // Flow layout of parked patches; shrink cells until everything fits.
        let parked: Vec<usize> = (0..self.shapes.len()).filter(|&p| self.placed[p].is_none()).collect();
        for cell in [16i64, 12, 10, 8, 6, 4] {
            let mut layout = Vec::new();
            let (mut x, mut y, mut row_h) = (4i64, bh + 12, 0i64);
            let mut ok = true;
            for &p in &parked {
                let (h, lo, hi) = self.shapes[p].bounds();
                let (w, hgt) = (i64::from(hi - lo + 1) * cell, i64::from(h) * cell + 10);
                if x + w > bw - 4 && x > 4 {
                    x = 4;
                    y += row_h + 4;
                    row_h = 0;
                }
                if x + w > bw - 4 || y + hgt > 2 * bh + 8 {
                    ok = false;
                    break;
                }
                layout.push((p, x, y));
                x += w + 8;
                row_h = row_h.max(hgt);
            }
            if ok || cell == 4 {
                for (p, x, y) in layout {
                    canvas.text(x, y, &p.to_string(), 1, INK);
                    Self::draw_shape(&mut canvas, &self.shapes[p], PALETTE[p % PALETTE.len()], x, y + 10, cell, true);
                }
                break;
            }
        }
        canvas
    }

    pub fn canonical(&self) -> String {
        let shapes: Vec<String> = self
            .shapes
            .iter()
            .map(|s| s.offsets().iter().map(|(r, c)| format!("{r},{c}")).collect::<Vec<_>>().join(" "))
            .collect();
        let placed: Vec<String> =
            self.placed.iter().map(|p| p.map_or("-".to_string(), |(r, c)| format!("{r},{c}"))).collect();
        format!("patch;{}x{};shapes={};placed={}", self.rows, self.cols, shapes.join("|"), placed.join("|"))
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
pub struct PatchParams {
    pub rows: usize,
    pub cols: usize,
    pub np: usize,
}

impl PatchParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("patch_reassembly", overrides, &["gs", "np"])?;
        let (rows, cols) = r.int_pair("gs", difficulty.pick((6, 6), (8, 8)))?;
        for (v, what) in [(rows, "rows"), (cols, "columns")] {
            if !(3..=10).contains(&v) {
                return Err(out_of_range("gs", v, &format!("{what} between 3 and 10")));
            }
        }
        let np = r.int("np", difficulty.pick(5, 6))?;
        if !(2..=10).contains(&np) || np > rows * cols {
            return Err(out_of_range("np", np, "between 2 and 10, at most the number of cells"));
        }
        Ok(Self { rows: rows as usize, cols: cols as usize, np: np as usize })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("gs".into(), serde_json::json!([self.rows, self.cols]));
        m.insert("np".into(), self.np.into());
        m
    }
}

/// Random partition of the grid into `np` connected regions grown from
/// random seeds; returns each cell's region.
fn partition(rows: usize, cols: usize, np: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut label = vec![usize::MAX; rows * cols];
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    cells.shuffle(rng);
    for (p, &i) in cells[..np].iter().enumerate() {
        label[i] = p;
    }
    loop {
        let mut frontier: Vec<(usize, usize)> = Vec::new();
        for i in 0..rows * cols {
            if label[i] != usize::MAX {
                continue;
            }
            for (dr, dc) in DIRS {
                let (r, c) = ((i / cols) as isize + dr, (i % cols) as isize + dc);
                if r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols {
                    let j = r as usize * cols + c as usize;
                    if label[j] != usize::MAX {
                        frontier.push((i, label[j]));
                    }
                }
            }
        }
        match frontier.choose(rng) {
            None => return label,
            Some(&(i, p)) => label[i] = p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatchEnv {
    params: PatchParams,
    state: PatchState,
    home: Vec<(usize, usize)>,
    schemas: SchemaSet,
}

impl PatchEnv {
    pub fn generate(params: PatchParams, seed: u64) -> Result<Self, ConfigError> {
        let mut rng = crate::rng::stream(seed, "patch_reassembly/generate");
        let label = partition(params.rows, params.cols, params.np, &mut rng);
        let mut shapes = Vec::with_capacity(params.np);
        let mut home = Vec::with_capacity(params.np);
        for p in 0..params.np {
            let cells: Vec<(i32, i32)> = (0..label.len())
                .filter(|&i| label[i] == p)
                .map(|i| ((i / params.cols) as i32, (i % params.cols) as i32))
                .collect();
            let anchor = *cells.iter().min().expect("regions are nonempty");
            home.push((anchor.0 as usize, anchor.1 as usize));
            shapes.push(Shape::from_cells(&cells).expect("nonempty"));
        }
        let mut placed = vec![None; params.np];
        placed[0] = Some(home[0]);
        let state = PatchState { rows: params.rows, cols: params.cols, shapes, placed };
        Ok(Self::from_parts(params, state, home))
    }

    pub fn from_parts(params: PatchParams, state: PatchState, home: Vec<(usize, usize)>) -> Self {
        let np = state.shapes.len() as i64;
        let schemas = SchemaSet::new(vec![
            PayloadSchema::new(
                "place",
                vec![
                    ArgSpec::int("patch", 0, np - 1),
                    ArgSpec::int("row", 0, state.rows as i64 - 1),
                    ArgSpec::int("column", 0, state.cols as i64 - 1),
                ],
                "place(p, r, c)",
                "put patch p on the grid with its anchor cell at row r, column c (moves it if already placed)",
            ),
            PayloadSchema::new(
                "remove",
                vec![ArgSpec::int("patch", 0, np - 1)],
                "remove(p)",
                "take patch p off the grid",
            ),
        ]);
        Self { params, state, home, schemas }
    }

    pub fn state(&self) -> &PatchState {
        &self.state
    }

    /// Anchors of the generating partition.
    pub fn home(&self) -> &[(usize, usize)] {
        &self.home
    }
}

impl Environment for PatchEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::PatchReassembly
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        fill_template(
            include_str!("../../resources/instructions/patch_reassembly.txt"),
            &[
                ("rows", self.state.rows.to_string()),
                ("cols", self.state.cols.to_string()),
                ("np", self.state.shapes.len().to_string()),
                ("max_patch", (self.state.shapes.len() - 1).to_string()),
                ("max_row", (self.state.rows - 1).to_string()),
                ("max_col", (self.state.cols - 1).to_string()),
            ],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, name: &str, args: &[Value]) -> String {
        let int = |i: usize| args.get(i).and_then(Value::as_i64).unwrap_or(0) as usize;
        let result = match name {
            "place" => self.state.place(int(0), (int(1), int(2))),
            "remove" => self.state.remove(int(0)),
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
        self.state.raster()
    }

    fn render_ascii(&self) -> Option<CharGrid> {
        Some(self.state.ascii())
    }

    fn goal_render(&self) -> Option<Canvas> {
        let mut solved = self.state.clone();
        solved.placed = self.home.iter().copied().map(Some).collect();
        Some(solved.raster())
    }

    fn goal_ascii(&self) -> Option<CharGrid> {
        let mut solved = self.state.clone();
        solved.placed = self.home.iter().copied().map(Some).collect();
        Some(solved.ascii())
    }

    fn canonical_state(&self) -> String {
        self.state.canonical()
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::patch::solve(self, opts)
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

    fn easy(seed: u64) -> PatchEnv {
        PatchEnv::generate(PatchParams::resolve(Difficulty::Easy, &ParamMap::new()).unwrap(), seed).unwrap()
    }

    #[test]
    fn partition_covers_grid_once() {
        for seed in 0..30 {
            let env = easy(seed);
            let mut solved = env.state().clone();
            solved.placed = env.home().iter().copied().map(Some).collect();
            let total: usize = solved.shapes.iter().map(Shape::len).sum();
            assert_eq!(total, 36);
            assert!(solved.is_solved());
            // connectivity of every shape
            for shape in &solved.shapes {
                let cells = shape.offsets();
                let mut seen = vec![cells[0]];
                let mut stack = vec![cells[0]];
                while let Some((r, c)) = stack.pop() {
                    for &(a, b) in cells {
                        if (a - r).abs() + (b - c).abs() == 1 && !seen.contains(&(a, b)) {
                            seen.push((a, b));
                            stack.push((a, b));
                        }
                    }
                }
                assert_eq!(seen.len(), cells.len());
            }
        }
    }

    #[test]
    fn place_and_remove() {
        let mut env = easy(2);
        let home1 = env.home()[1];
        let before = env.state().clone();
        assert_eq!(
            env.apply("place", &[Value::Int(1), Value::Int(home1.0 as i64), Value::Int(home1.1 as i64)]),
            EXECUTED
        );
        assert_eq!(env.apply("remove", &[Value::Int(1)]), EXECUTED);
        assert_eq!(env.state(), &before);
        assert_eq!(env.apply("remove", &[Value::Int(1)]), NOT_ON_GRID);
        let home0 = env.home()[0];
        let overlap = env.apply("place", &[Value::Int(2), Value::Int(home0.0 as i64), Value::Int(home0.1 as i64)]);
        assert_eq!(overlap, CANNOT_PLACE);
    }

    #[test]
    fn ascii_round_trip_and_stars() {
        for seed in 0..20 {
            let env = easy(seed);
            let grid = env.render_ascii().unwrap();
            let text = crate::render::ascii_frame(&grid);
            assert!(text.contains(PARKED_HEADER));
            assert_eq!(text.matches('*').count(), 4);
            assert_eq!(PatchState::parse_ascii(&grid).unwrap(), env.state().clone());
        }
    }

    #[test]
    fn parameter_ranges() {
        let mut o = ParamMap::new();
        o.insert("np".into(), 1.into());
        assert!(PatchParams::resolve(Difficulty::Easy, &o).is_err());
        let hard = PatchParams::resolve(Difficulty::Hard, &ParamMap::new()).unwrap();
        assert_eq!((hard.rows, hard.cols, hard.np), (8, 8, 6));
    }
}
