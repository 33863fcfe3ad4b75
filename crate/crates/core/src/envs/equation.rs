//! Matchstick Equation: a false seven-segment equation `A op B = C` that
//! becomes true after relocating one or two sticks.

use std::any::Any;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{fill_template, EnvKind, Environment, EXECUTED};
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{Canvas, CharGrid, Rgb, BACKGROUND, INK};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const NO_STICK: &str = "no stick at source";
pub const OCCUPIED: &str = "destination occupied";
pub const NOTHING_TO_UNDO: &str = "nothing to undo";
pub const BAD_SLOT: &str = "no such segment at destination";

/// Seven-segment codes for 0-9; bit k is segment k (a..g = 0..6).
pub const DIGITS: [u8; 10] = [0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F];

/// Operator slots: 0 horizontal, 1 vertical, 2 `\`, 3 `/`.
pub const MINUS: u8 = 0b0001;
pub const PLUS: u8 = 0b0011;
pub const TIMES: u8 = 0b1100;
/// Relation slots: 0 upper bar, 1 lower bar.
pub const EQUALS: u8 = 0b11;

pub const CELL_W: usize = 6;
pub const ASCII_ROWS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Digit,
    Operator,
    Relation,
}

impl Slot {
    pub fn segments(self) -> usize {
        match self {
            Slot::Digit => 7,
            Slot::Operator => 4,
            Slot::Relation => 2,
        }
    }

    fn letter(self) -> char {
        match self {
            Slot::Digit => 'D',
            Slot::Operator => 'O',
            Slot::Relation => 'R',
        }
    }
}

/// A relocation `(i, s) -> (j, t)`.
pub type StickMove = [usize; 4];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EquationState {
    pub layout: Vec<Slot>,
    pub masks: Vec<u8>,
    pub history: Vec<StickMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Glyph {
    Digit(u8),
    Op(char),
    Eq,
}

impl EquationState {
    /// Lays out `a op b = c` with `op` one of `+ - x`.
    pub fn from_equation(a: u32, op: char, b: u32, c: u32) -> EquationState {
        let mut layout = Vec::new();
        let mut masks = Vec::new();
        let push_number = |n: u32, layout: &mut Vec<Slot>, masks: &mut Vec<u8>| {
            for ch in n.to_string().chars() {
                layout.push(Slot::Digit);
                masks.push(DIGITS[ch.to_digit(10).expect("digit") as usize]);
            }
        };
        push_number(a, &mut layout, &mut masks);
        layout.push(Slot::Operator);
        masks.push(match op {
            '+' => PLUS,
            '-' => MINUS,
            _ => TIMES,
        });
        push_number(b, &mut layout, &mut masks);
        layout.push(Slot::Relation);
        masks.push(EQUALS);
        push_number(c, &mut layout, &mut masks);
        EquationState { layout, masks, history: Vec::new() }
    }

    pub fn stick_count(&self) -> u32 {
        self.masks.iter().map(|m| m.count_ones()).sum()
    }

    fn glyph(&self, i: usize) -> Option<Glyph> {
        let m = self.masks[i];
        match self.layout[i] {
            Slot::Digit => DIGITS.iter().position(|&d| d == m).map(|d| Glyph::Digit(d as u8)),
            Slot::Operator => match m {
                PLUS => Some(Glyph::Op('+')),
                MINUS => Some(Glyph::Op('-')),
                TIMES => Some(Glyph::Op('x')),
                _ => None,
            },
            Slot::Relation => (m == EQUALS).then_some(Glyph::Eq),
        }
    }

    /// Number of positions whose stick set is not a known glyph.
    pub fn invalid_glyphs(&self) -> usize {
        (0..self.masks.len()).filter(|&i| self.glyph(i).is_none()).count()
    }

    /// Decoded `(a, op, b, c)` when every glyph is valid and no number has a
    /// leading zero.
    fn decode(&self) -> Option<(i64, char, i64, i64)> {
        let mut numbers: Vec<i64> = Vec::new();
        let mut digits: Vec<u8> = Vec::new();
        let mut op = None;
        let flush = |digits: &mut Vec<u8>, numbers: &mut Vec<i64>| -> Option<()> {
            if digits.is_empty() || (digits.len() > 1 && digits[0] == 0) {
                return None;
            }
            numbers.push(digits.iter().fold(0i64, |acc, &d| acc * 10 + i64::from(d)));
            digits.clear();
            Some(())
        };
        for i in 0..self.masks.len() {
            match self.glyph(i)? {
                Glyph::Digit(d) => digits.push(d),
                Glyph::Op(o) => {
                    flush(&mut digits, &mut numbers)?;
                    op = Some(o);
                }
                Glyph::Eq => flush(&mut digits, &mut numbers)?,
            }
        }
        flush(&mut digits, &mut numbers)?;
        match numbers.as_slice() {
            &[a, b, c] => Some((a, op?, b, c)),
            _ => None,
        }
    }

    /// Difference between the two sides when the equation is readable.
    pub fn arithmetic_error(&self) -> Option<i64> {
        let (a, op, b, c) = self.decode()?;
        let lhs = match op {
            '+' => a + b,
            '-' => a - b,
            _ => a * b,
        };
        Some((lhs - c).abs())
    }

    pub fn is_valid(&self) -> bool {
        self.arithmetic_error() == Some(0)
    }

    pub fn has(&self, i: usize, s: usize) -> bool {
        i < self.masks.len() && s < self.layout[i].segments() && self.masks[i] & (1 << s) != 0
    }

    pub fn try_move(&mut self, [i, s, j, t]: StickMove) -> Result<(), &'static str> {
        if !self.has(i, s) {
            return Err(NO_STICK);
        }
        if j >= self.masks.len() || t >= self.layout[j].segments() {
            return Err(BAD_SLOT);
        }
        if self.masks[j] & (1 << t) != 0 {
            return Err(OCCUPIED);
        }
        self.masks[i] &= !(1 << s);
        self.masks[j] |= 1 << t;
        self.history.push([i, s, j, t]);
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), &'static str> {
        let [i, s, j, t] = self.history.pop().ok_or(NOTHING_TO_UNDO)?;
        self.masks[j] &= !(1 << t);
        self.masks[i] |= 1 << s;
        Ok(())
    }

    /// Every legal relocation.
    pub fn moves(&self) -> Vec<StickMove> {
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for (i, slot) in self.layout.iter().enumerate() {
            for s in 0..slot.segments() {
                if self.masks[i] & (1 << s) != 0 {
                    sources.push((i, s));
                } else {
                    targets.push((i, s));
                }
            }
        }
        let mut out = Vec::with_capacity(sources.len() * targets.len());
        for &(i, s) in &sources {
            for &(j, t) in &targets {
                out.push([i, s, j, t]);
            }
        }
        out
    }

    /// Six text columns per position over six rows, then an index footer.
    pub fn ascii(&self) -> CharGrid {
        let width = self.masks.len() * CELL_W;
        let mut canvas = vec![vec![' '; width]; ASCII_ROWS];
        let mut put = |row: usize, col: usize, text: &str| {
            for (k, ch) in text.chars().enumerate() {
                canvas[row][col + k] = ch;
            }
        };
        for (i, slot) in self.layout.iter().enumerate() {
            let x = i * CELL_W;
            let m = self.masks[i];
            let on = |s: usize| m & (1 << s) != 0;
            match slot {
                Slot::Digit => {
                    if on(0) {
                        put(0, x + 1, "---");
                    }
                    if on(6) {
                        put(2, x + 1, "---");
                    }
                    if on(3) {
                        put(5, x + 1, "---");
                    }
                    for (seg, col, rows) in [(5, 0, [1, 2]), (1, 4, [1, 2]), (4, 0, [3, 4]), (2, 4, [3, 4])] {
                        if on(seg) {
                            for r in rows {
                                put(r, x + col, "|");
                            }
                        }
                    }
                }
                Slot::Operator => {
                    if on(0) {
                        put(2, x + 1, "---");
                    }
                    if on(2) {
                        put(1, x + 1, "\\");
                        put(3, x + 3, "\\");
                    }
                    if on(3) {
                        put(1, x + 3, "/");
                        put(3, x + 1, "/");
                    }
                    if on(1) {
                        put(1, x + 2, "|");
                        put(3, x + 2, "|");
                    }
                    let centre = if on(1) && on(0) {
                        Some('+')
                    } else if on(1) {
                        Some('|')
                    } else if on(3) {
                        Some('/')
                    } else if on(2) {
                        Some('\\')
                    } else {
                        None
                    };
                    if let Some(ch) = centre {
                        put(2, x + 2, &ch.to_string());
                    }
                }
                Slot::Relation => {
                    if on(0) {
                        put(1, x + 1, "---");
                    }
                    if on(1) {
                        put(4, x + 1, "---");
                    }
                }
            }
            put(6, x + 2, &i.to_string());
        }
        CharGrid::new(canvas.into_iter().map(|r| r.into_iter().collect()).collect()).expect("ascii rows")
    }

    /// Inverse of [`EquationState::ascii`] given the position layout.
    pub fn parse_ascii(grid: &CharGrid, layout: &[Slot]) -> Option<EquationState> {
        if grid.height() != ASCII_ROWS || grid.width() != layout.len() * CELL_W {
            return None;
        }
        let at = |r: usize, c: usize| grid.at(r, c);
        let mut masks = Vec::with_capacity(layout.len());
        for (i, slot) in layout.iter().enumerate() {
            let x = i * CELL_W;
            let mut m = 0u8;
            let mut set = |s: usize, cond: bool| {
                if cond {
                    m |= 1 << s;
                }
            };
            match slot {
                Slot::Digit => {
                    set(0, at(0, x + 1) == '-');
                    set(1, at(1, x + 4) == '|');
                    set(2, at(3, x + 4) == '|');
                    set(3, at(5, x + 1) == '-');
                    set(4, at(3, x) == '|');
                    set(5, at(1, x) == '|');
                    set(6, at(2, x + 1) == '-');
                }
                Slot::Operator => {
                    set(0, at(2, x + 1) == '-');
                    set(1, at(1, x + 2) == '|');
                    set(2, at(1, x + 1) == '\\');
                    set(3, at(1, x + 3) == '/');
                }
                Slot::Relation => {
                    set(0, at(1, x + 1) == '-');
                    set(1, at(4, x + 1) == '-');
                }
            }
            masks.push(m);
        }
        Some(EquationState { layout: layout.to_vec(), masks, history: Vec::new() })
    }

    pub fn raster(&self) -> Canvas {
        let mut canvas = Canvas::new(RASTER_W, RASTER_H, BACKGROUND);
        for (i, slot) in self.layout.iter().enumerate() {
            let x0 = 12.0 + i as f64 * 48.0;
            let y0 = 16.0;
            for s in 0..slot.segments() {
                if self.masks[i] & (1 << s) == 0 {
                    continue;
                }
                let ((ax, ay), (bx, by)) = segment_geometry(*slot, s);
                stick(&mut canvas, (x0 + ax, y0 + ay), (x0 + bx, y0 + by));
            }
            canvas.text(x0 as i64 + 17, 110, &i.to_string(), 1, INK);
        }
        canvas
    }

    pub fn canonical(&self) -> String {
        let layout: String = self.layout.iter().map(|s| s.letter()).collect();
        let masks: Vec<String> = self.masks.iter().map(|m| m.to_string()).collect();
        format!("equation;{layout};{}", masks.join(","))
    }
}

pub const RASTER_W: u32 = 400;
pub const RASTER_H: u32 = 128;
const STICK: Rgb = Rgb::new(196, 140, 70);
const HEAD: Rgb = Rgb::new(170, 40, 30);

fn segment_geometry(slot: Slot, s: usize) -> ((f64, f64), (f64, f64)) {
    match (slot, s) {
        (Slot::Digit, 0) => ((7.0, 4.0), (33.0, 4.0)),
        (Slot::Digit, 1) => ((36.0, 7.0), (36.0, 37.0)),
        (Slot::Digit, 2) => ((36.0, 43.0), (36.0, 73.0)),
        (Slot::Digit, 3) => ((7.0, 76.0), (33.0, 76.0)),
        (Slot::Digit, 4) => ((4.0, 43.0), (4.0, 73.0)),
        (Slot::Digit, 5) => ((4.0, 7.0), (4.0, 37.0)),
        (Slot::Digit, _) => ((7.0, 40.0), (33.0, 40.0)),
        (Slot::Operator, 0) => ((7.0, 40.0), (33.0, 40.0)),
        (Slot::Operator, 1) => ((20.0, 27.0), (20.0, 53.0)),
        (Slot::Operator, 2) => ((9.0, 29.0), (31.0, 51.0)),
        (Slot::Operator, _) => ((31.0, 29.0), (9.0, 51.0)),
        (Slot::Relation, 0) => ((7.0, 32.0), (33.0, 32.0)),
        (Slot::Relation, _) => ((7.0, 48.0), (33.0, 48.0)),
    }
}

/// A rounded bar with a darker head at its first end.
fn stick(canvas: &mut Canvas, (ax, ay): (f64, f64), (bx, by): (f64, f64)) {
    let (dx, dy) = (bx - ax, by - ay);
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    let (nx, ny) = (-dy / len * 2.5, dx / len * 2.5);
    canvas.fill_convex(&[(ax + nx, ay + ny), (bx + nx, by + ny), (bx - nx, by - ny), (ax - nx, ay - ny)], STICK);
    canvas.fill_circle(bx, by, 2.5, STICK);
    canvas.fill_circle(ax, ay, 3.5, HEAD);
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationParams {
    /// Number of sticks displaced from the true equation.
    pub bm: usize,
}

impl EquationParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("matchstick_equation", overrides, &["bm"])?;
        let bm = r.int("bm", difficulty.pick(1, 2))?;
        if !(1..=2).contains(&bm) {
            return Err(out_of_range("bm", bm, "1 or 2"));
        }
        Ok(Self { bm: bm as usize })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("bm".into(), self.bm.into());
        m
    }
}

#[derive(Debug, Clone)]
pub struct EquationEnv {
    params: EquationParams,
    state: EquationState,
    /// The true equation the instance was derived from.
    original: EquationState,
    schemas: SchemaSet,
}

fn random_equation(rng: &mut impl Rng) -> (u32, char, u32, u32) {
    loop {
        let op = *['+', '-', 'x'].choose(rng).expect("nonempty");
        let a = rng.gen_range(0..=99u32);
        let b = rng.gen_range(0..=99u32);
        let c = match op {
            '+' => i64::from(a + b),
            '-' => i64::from(a) - i64::from(b),
            _ => i64::from(a * b),
        };
        if (0..=99).contains(&c) {
            return (a, op, b, c as u32);
        }
    }
}

impl EquationEnv {
    pub fn generate(params: EquationParams, seed: u64) -> Result<Self, ConfigError> {
        let mut rng = crate::rng::stream(seed, "matchstick_equation/generate");
        for _ in 0..10_000 {
            let (a, op, b, c) = random_equation(&mut rng);
            let original = EquationState::from_equation(a, op, b, c);
            let mut state = original.clone();
            for _ in 0..params.bm {
                let moves = state.moves();
                let m = *moves.choose(&mut rng).expect("sticks exist");
                state.try_move(m).expect("legal move");
            }
            state.history.clear();
            if state.is_valid() {
                continue;
            }
            if crate::solvers::equation::shortest(&state, params.bm).is_none() {
                continue;
            }
            return Ok(Self::from_parts(params, state, original));
        }
        Err(ConfigError::Generation("no corrupted equation found".into()))
    }

    pub fn from_parts(params: EquationParams, state: EquationState, original: EquationState) -> Self {
        let n = state.masks.len() as i64;
        let schemas = SchemaSet::new(vec![
            PayloadSchema::new(
                "move",
                vec![ArgSpec::int_list("stick move", vec![(0, n - 1), (0, 6), (0, n - 1), (0, 6)])],
                "move([i, s, j, t])",
                "move the stick at segment s of position i to the empty segment t of position j",
            ),
            PayloadSchema::new("undo", vec![], "undo()", "revert the most recent successful move"),
        ]);
        Self { params, state, original, schemas }
    }

    pub fn state(&self) -> &EquationState {
        &self.state
    }

    pub fn original(&self) -> &EquationState {
        &self.original
    }
}

impl Environment for EquationEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::MatchstickEquation
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        let kinds: Vec<String> = self
            .state
            .layout
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let name = match s {
                    Slot::Digit => "digit",
                    Slot::Operator => "operator",
                    Slot::Relation => "equals sign",
                };
                format!("{i} = {name}")
            })
            .collect();
        fill_template(
            include_str!("../../resources/instructions/matchstick_equation.txt"),
            &[
                ("positions", kinds.join(", ")),
                ("max_pos", (self.state.masks.len() - 1).to_string()),
                ("bm", self.params.bm.to_string()),
            ],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, name: &str, args: &[Value]) -> String {
        let result = match name {
            "undo" => self.state.undo(),
            "move" => {
                let v: Vec<usize> = args
                    .first()
                    .and_then(Value::as_list)
                    .map(|l| l.iter().map(|x| x.as_i64().unwrap_or(0) as usize).collect())
                    .unwrap_or_default();
                match v.as_slice() {
                    &[i, s, j, t] => self.state.try_move([i, s, j, t]),
                    _ => Err(NO_STICK),
                }
            }
            _ => Err("unsupported action"),
        };
        match result {
            Ok(()) => EXECUTED.to_string(),
            Err(msg) => msg.to_string(),
        }
    }

    fn is_solved(&self) -> bool {
        self.state.is_valid()
    }

    fn render(&self) -> Canvas {
        self.state.raster()
    }

    fn render_ascii(&self) -> Option<CharGrid> {
        Some(self.state.ascii())
    }

    fn goal_render(&self) -> Option<Canvas> {
        Some(self.original.raster())
    }

    fn goal_ascii(&self) -> Option<CharGrid> {
        Some(self.original.ascii())
    }

    fn canonical_state(&self) -> String {
        self.state.canonical()
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::equation::solve(self, opts)
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

    #[test]
    fn validity() {
        assert!(EquationState::from_equation(6, '+', 2, 8).is_valid());
        assert!(!EquationState::from_equation(6, '+', 2, 9).is_valid());
        assert!(EquationState::from_equation(12, 'x', 3, 36).is_valid());
        assert!(EquationState::from_equation(12, '-', 3, 9).is_valid());
        let mut broken = EquationState::from_equation(6, '+', 2, 8);
        broken.masks[0] = 0b0000_0011;
        assert!(!broken.is_valid());
        assert_eq!(broken.invalid_glyphs(), 1);
    }

    #[test]
    fn codebook_rejects_non_digits() {
        let known: Vec<u8> = DIGITS.to_vec();
        for m in 0u8..128 {
            let mut s = EquationState::from_equation(1, '+', 1, 2);
            s.masks[0] = m;
            assert_eq!(s.invalid_glyphs() == 0, known.contains(&m), "mask {m:#x}");
        }
    }

    #[test]
    fn leading_zero_is_invalid() {
        let mut s = EquationState::from_equation(10, '+', 1, 11);
        s.masks[0] = DIGITS[0];
        s.masks[1] = DIGITS[1];
        // "01 + 1 = 11" reads with a leading zero
        assert!(s.arithmetic_error().is_none());
    }

    #[test]
    fn move_and_undo() {
        let mut s = EquationState::from_equation(6, '+', 2, 8);
        let before = s.masks.clone();
        let sticks = s.stick_count();
        assert_eq!(s.try_move([1, 1, 0, 1]), Ok(()));
        assert_eq!(s.stick_count(), sticks);
        assert_eq!(s.try_move([0, 1, 3, 0]), Err(OCCUPIED));
        assert_eq!(s.try_move([1, 1, 0, 4]), Err(NO_STICK));
        s.undo().unwrap();
        assert_eq!(s.masks, before);
        assert_eq!(s.undo(), Err(NOTHING_TO_UNDO));
    }

    #[test]
    fn ascii_golden() {
        let s = EquationState::from_equation(6, '+', 2, 8);
        let text = crate::render::ascii_frame(&s.ascii());
        let expected = [
            " ---         ---         ---  ",
            "|       |       |  ---  |   | ",
            "|---   -+-   ---|       |---| ",
            "|   |   |   |           |   | ",
            "|   |       |      ---  |   | ",
            " ---         ---         ---  ",
            "  0     1     2     3     4   ",
        ];
        assert_eq!(text, expected.join("\n"));
    }

    #[test]
    fn ascii_round_trip() {
        for seed in 0..30 {
            let env = EquationEnv::generate(EquationParams { bm: 2 }, seed).unwrap();
            let grid = env.state().ascii();
            let back = EquationState::parse_ascii(&grid, &env.state().layout).unwrap();
            assert_eq!(back.masks, env.state().masks);
        }
    }

    #[test]
    fn generated_instances_are_false() {
        for seed in 0..20 {
            let env = EquationEnv::generate(EquationParams { bm: 1 }, seed).unwrap();
            assert!(!env.is_solved());
            assert!(env.original().is_valid());
            assert_eq!(env.state().stick_count(), env.original().stick_count());
        }
    }
}
