//! Bounding boxes in normalized page coordinates and the geometry used by
//! segment-level instructions.
//!
//! All boxes live on a 0..=1000 integer grid (thousandths of the page width
//! and height), the convention of layout-aware document encoders. The y axis
//! grows downward: "up" means smaller y.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in normalized page coordinates.
///
/// Invariant: `0 <= x1 <= x2 <= 1000` and `0 <= y1 <= y2 <= 1000`.
/// Serializes as the 4-array `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct BBox {
    pub x1: u16,
    pub y1: u16,
    pub x2: u16,
    pub y2: u16,
}

pub const COORD_SCALE: i64 = 1000;

impl BBox {
    /// Build a box, enforcing ordering and the 0..=1000 range.
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Result<Self> {
        let coords = [x1, y1, x2, y2];
        if coords.iter().any(|&c| c < 0 || c > COORD_SCALE) {
            return Err(Error::InvalidBox {
                coords,
                reason: format!("coordinate outside 0..={COORD_SCALE}"),
                doc_id: None,
            });
        }
        if x1 > x2 || y1 > y2 {
            return Err(Error::InvalidBox {
                coords,
                reason: "inverted box (x1 > x2 or y1 > y2)".into(),
                doc_id: None,
            });
        }
        Ok(BBox {
            x1: x1 as u16,
            y1: y1 as u16,
            x2: x2 as u16,
            y2: y2 as u16,
        })
    }

    /// The all-zero box used for masked positions.
    pub fn zero() -> Self {
        BBox {
            x1: 0,
            y1: 0,
            x2: 0,
            y2: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x1 == 0 && self.y1 == 0 && self.x2 == 0 && self.y2 == 0
    }

    /// Center point in (fractional) normalized coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x1 as f64 + self.x2 as f64) / 2.0,
            (self.y1 as f64 + self.y2 as f64) / 2.0,
        )
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    /// Render as the bracketed list used inside questions and answers.
    pub fn bracketed(&self) -> String {
        format!("[{},{},{},{}]", self.x1, self.y1, self.x2, self.y2)
    }
}

impl TryFrom<[i64; 4]> for BBox {
    type Error = Error;
    fn try_from(v: [i64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [i64; 4] {
    fn from(b: BBox) -> [i64; 4] {
        [b.x1 as i64, b.y1 as i64, b.x2 as i64, b.y2 as i64]
    }
}

/// Scale a pixel box onto the 0..=1000 grid.
///
/// Each coordinate maps to `round(raw / page_dim * 1000)` and is clamped to
/// the grid. Inverted or out-of-page boxes are rejected so bad annotations
/// surface at ingest time instead of corrupting instructions.
pub fn normalize_bbox(raw: [i64; 4], page_w: i64, page_h: i64) -> Result<BBox> {
    if page_w <= 0 || page_h <= 0 {
        return Err(Error::InvalidBox {
            coords: raw,
            reason: format!("non-positive page size {page_w}x{page_h}"),
            doc_id: None,
        });
    }
    let [rx1, ry1, rx2, ry2] = raw;
    if rx1 > rx2 || ry1 > ry2 {
        return Err(Error::InvalidBox {
            coords: raw,
            reason: "inverted box (x1 > x2 or y1 > y2)".into(),
            doc_id: None,
        });
    }
    if rx1 < 0 || ry1 < 0 || rx2 > page_w || ry2 > page_h {
        return Err(Error::InvalidBox {
            coords: raw,
            reason: format!("box outside page 0,0..{page_w},{page_h}"),
            doc_id: None,
        });
    }
    let scale = |v: i64, dim: i64| -> i64 {
        let scaled = (v as f64 / dim as f64 * COORD_SCALE as f64).round() as i64;
        scaled.clamp(0, COORD_SCALE)
    };
    BBox::new(
        scale(rx1, page_w),
        scale(ry1, page_h),
        scale(rx2, page_w),
        scale(ry2, page_h),
    )
}

/// Smallest box containing every input box.
///
/// Errors on an empty list: in CoT construction that means no relevant
/// sentence matched any segment.
pub fn union_bbox(boxes: &[BBox]) -> Result<BBox> {
    let first = boxes.first().ok_or(Error::EmptyUnion)?;
    let mut x1 = first.x1;
    let mut y1 = first.y1;
    let mut x2 = first.x2;
    let mut y2 = first.y2;
    for b in &boxes[1..] {
        x1 = x1.min(b.x1);
        y1 = y1.min(b.y1);
        x2 = x2.max(b.x2);
        y2 = y2.max(b.y2);
    }
    Ok(BBox { x1, y1, x2, y2 })
}

/// Eight-way compass direction between box centers, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    UpperRight,
    Up,
    UpperLeft,
    Left,
    LowerLeft,
    Down,
    LowerRight,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::Right,
        Direction::UpperRight,
        Direction::Up,
        Direction::UpperLeft,
        Direction::Left,
        Direction::LowerLeft,
        Direction::Down,
        Direction::LowerRight,
    ];

    /// English label used in geometric instruction answers.
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Right => "right",
            Direction::UpperRight => "upper right",
            Direction::Up => "up",
            Direction::UpperLeft => "upper left",
            Direction::Left => "left",
            Direction::LowerLeft => "lower left",
            Direction::Down => "down",
            Direction::LowerRight => "lower right",
        }
    }

    pub fn opposite(&self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::UpperRight => Direction::LowerLeft,
            Direction::Up => Direction::Down,
            Direction::UpperLeft => Direction::LowerRight,
            Direction::Left => Direction::Right,
            Direction::LowerLeft => Direction::UpperRight,
            Direction::Down => Direction::Up,
            Direction::LowerRight => Direction::UpperLeft,
        }
    }
}

/// Compass direction from the center of `a` to the center of `b`.
///
/// Sectors are 45 degrees wide and centered on the axes and diagonals, with
/// boundaries at odd multiples of 22.5 degrees. An angle exactly on a
/// boundary belongs to the counterclockwise sector. Returns `None` when the
/// centers coincide.
pub fn direction_between(a: &BBox, b: &BBox) -> Option<Direction> {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    let dx = bx - ax;
    // y grows downward on the page, so flip to mathematical orientation.
    let dy_up = ay - by;
    if dx == 0.0 && dy_up == 0.0 {
        return None;
    }
    let mut deg = dy_up.atan2(dx).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    // Sector k covers [45k - 22.5, 45k + 22.5); a boundary angle lands in
    // the higher (counterclockwise) sector.
    let idx = (((deg + 22.5) / 45.0).floor() as usize) % 8;
    Some(Direction::ALL[idx])
}

/// Euclidean distance between box centers in normalized units.
pub fn center_distance(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt()
}

/// Center distance rounded to the nearest integer (half up), as reported in
/// geometric instruction answers.
pub fn rounded_center_distance(a: &BBox, b: &BBox) -> u32 {
    center_distance(a, b).round() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn bx(x1: i64, y1: i64, x2: i64, y2: i64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn normalize_exact_arithmetic() {
        assert_eq!(
            normalize_bbox([80, 250, 160, 500], 800, 1000).unwrap(),
            bx(100, 250, 200, 500)
        );
    }

    #[test]
    fn normalize_full_page_identity() {
        assert_eq!(
            normalize_bbox([0, 0, 800, 1000], 800, 1000).unwrap(),
            bx(0, 0, 1000, 1000)
        );
    }

    #[test]
    fn normalize_rounds_thirds() {
        // round(1/3 * 1000) = 333 on every coordinate
        assert_eq!(
            normalize_bbox([1, 1, 1, 1], 3, 3).unwrap(),
            bx(333, 333, 333, 333)
        );
    }

    #[test]
    fn normalize_rejects_inverted_and_out_of_page() {
        assert!(normalize_bbox([10, 0, 5, 5], 100, 100).is_err());
        assert!(normalize_bbox([0, 0, 150, 50], 100, 100).is_err());
        assert!(normalize_bbox([-1, 0, 5, 5], 100, 100).is_err());
    }

    #[test]
    fn union_singleton_identity() {
        let b = bx(10, 10, 20, 20);
        assert_eq!(union_bbox(&[b]).unwrap(), b);
    }

    #[test]
    fn union_min_max() {
        let u = union_bbox(&[bx(10, 10, 20, 20), bx(15, 5, 30, 18)]).unwrap();
        assert_eq!(u, bx(10, 5, 30, 20));
    }

    #[test]
    fn union_empty_is_error() {
        assert!(matches!(union_bbox(&[]), Err(Error::EmptyUnion)));
    }

    #[test]
    fn union_contains_all_and_is_permutation_invariant() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut boxes = Vec::new();
        for _ in 0..50 {
            let x1 = rng.gen_range(0..900);
            let y1 = rng.gen_range(0..900);
            let x2 = rng.gen_range(x1..=1000);
            let y2 = rng.gen_range(y1..=1000);
            boxes.push(bx(x1, y1, x2, y2));
        }
        let u = union_bbox(&boxes).unwrap();
        // brute-force containment check
        for b in &boxes {
            assert!(u.contains(b), "{u:?} does not contain {b:?}");
        }
        let mut rev = boxes.clone();
        rev.reverse();
        assert_eq!(union_bbox(&rev).unwrap(), u);
        // monotone: adding a box never shrinks the union
        let mut extended = boxes.clone();
        extended.push(bx(0, 0, 1000, 1000));
        assert!(union_bbox(&extended).unwrap().contains(&u));
    }

    #[test]
    fn direction_axis_cases() {
        // (100,100) -> (200,100): right, distance 100
        let a = bx(90, 90, 110, 110);
        let b = bx(190, 90, 210, 110);
        assert_eq!(direction_between(&a, &b), Some(Direction::Right));
        assert_eq!(rounded_center_distance(&a, &b), 100);

        // (100,100) -> (100,40): up (smaller y), distance 60
        let c = bx(90, 30, 110, 50);
        assert_eq!(direction_between(&a, &c), Some(Direction::Up));
        assert_eq!(rounded_center_distance(&a, &c), 60);
    }

    #[test]
    fn direction_345_triangle() {
        // centers (0,0) -> (30,40): 53.13 degrees below the x axis
        let a = bx(0, 0, 0, 0);
        let b = bx(30, 40, 30, 40);
        assert_eq!(direction_between(&a, &b), Some(Direction::LowerRight));
        assert_eq!(rounded_center_distance(&a, &b), 50);
    }

    #[test]
    fn direction_coincident_centers_is_none() {
        let a = bx(10, 10, 20, 20);
        let b = bx(5, 5, 25, 25);
        assert_eq!(direction_between(&a, &b), None);
    }

    #[test]
    fn direction_antisymmetry_random() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 2000 {
            let mk = |rng: &mut StdRng| {
                let x1 = rng.gen_range(0..1000);
                let y1 = rng.gen_range(0..1000);
                bx(x1, y1, rng.gen_range(x1..=1000), rng.gen_range(y1..=1000))
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            if let Some(d) = direction_between(&a, &b) {
                assert_eq!(direction_between(&b, &a), Some(d.opposite()));
                assert_eq!(
                    rounded_center_distance(&a, &b),
                    rounded_center_distance(&b, &a)
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn bbox_serde_is_four_array() {
        let b = bx(1, 2, 3, 4);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1,2,3,4]");
        let parsed: BBox = serde_json::from_str("[1,2,3,4]").unwrap();
        assert_eq!(parsed, b);
        assert!(serde_json::from_str::<BBox>("[5,0,1,0]").is_err());
    }
}
