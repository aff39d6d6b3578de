use serde::{Deserialize, Serialize};

use super::{Author, CanvasError, CanvasSpec, Point, Stroke};
use crate::digest::Fnv1a64;

const WHITE: [u8; 3] = [255, 255, 255];

/// Who last wrote a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub author: Author,
    pub stroke_id: u64,
}

/// RGB raster with per-pixel authorship, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    spec: CanvasSpec,
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
    provenance: Vec<Option<Provenance>>,
}

impl Canvas {
    pub fn new(spec: CanvasSpec) -> Result<Self, CanvasError> {
        spec.validate()?;
        let (width, height) = spec.pixel_dims();
        Ok(Self::blank(spec, width, height))
    }

    fn blank(spec: CanvasSpec, width: usize, height: usize) -> Self {
        Self {
            spec,
            width,
            height,
            rgb: vec![WHITE; width * height],
            provenance: vec![None; width * height],
        }
    }

    pub fn spec(&self) -> &CanvasSpec {
        &self.spec
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.rgb[y * self.width + x]
    }

    pub fn provenance(&self, x: usize, y: usize) -> Option<Provenance> {
        self.provenance[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3], prov: Option<Provenance>) {
        let i = y * self.width + x;
        self.rgb[i] = rgb;
        self.provenance[i] = prov;
    }

    /// Pixels whose last writer was `author`.
    pub fn authored_pixels(&self, author: Author) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.provenance
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.is_some_and(|p| p.author == author))
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Rasterizes a full stroke. See [`Canvas::paint_path`].
    pub fn rasterize_stroke(&mut self, stroke: &Stroke) -> Result<Vec<usize>, CanvasError> {
        stroke.validate(&self.spec)?;
        Ok(self.paint_path(&stroke.path, stroke.color, stroke.width_mm, Provenance {
            author: stroke.author,
            stroke_id: stroke.id,
        }))
    }

    /// Traces each consecutive pair of points with a supercover line and
    /// stamps a filled disc of radius `ceil(width·px_per_mm / 2)` at every
    /// line pixel. Returns the distinct pixel indices written, ascending.
    /// Points are assumed in bounds.
    pub fn paint_path(&mut self, path: &[Point], color: [u8; 3], width_mm: f64, prov: Provenance) -> Vec<usize> {
        let radius = (width_mm * self.spec.px_per_mm / 2.0).ceil() as i64;
        let offsets: Vec<(i64, i64)> = (-radius..=radius)
            .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| dx * dx + dy * dy <= radius * radius)
            .collect();

        let mut centres: Vec<(i64, i64)> = Vec::new();
        match path {
            [] => {}
            [only] => centres.push(self.spec.to_pixel(*only)),
            _ => {
                for w in path.windows(2) {
                    centres.extend(supercover_line(self.spec.to_pixel(w[0]), self.spec.to_pixel(w[1])));
                }
            }
        }

        let mut written = Vec::new();
        for (cx, cy) in centres {
            for (dx, dy) in &offsets {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
                    continue;
                }
                let i = y as usize * self.width + x as usize;
                self.rgb[i] = color;
                self.provenance[i] = Some(prov);
                written.push(i);
            }
        }
        written.sort_unstable();
        written.dedup();
        written
    }

    /// FNV-1a 64 over the RGB bytes in row-major order.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a64::new();
        for px in &self.rgb {
            h.update(px);
        }
        h.finish()
    }

    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest())
    }

    /// Binary PPM (P6, maxval 255).
    pub fn export_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.rgb.len() * 3);
        for px in &self.rgb {
            out.extend_from_slice(px);
        }
        out
    }
}

/// Parses a P6 image back into `(width, height, rgb)`.
pub fn parse_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<[u8; 3]>), CanvasError> {
    let bad = |m: &str| CanvasError::BadPpm(m.to_string());
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header not ASCII"))?);
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P6" {
        return Err(bad("magic is not P6"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("non-numeric header field"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    let body = bytes.get(pos..).ok_or_else(|| bad("missing raster"))?;
    if body.len() != w * h * 3 {
        return Err(bad("raster length does not match dimensions"));
    }
    Ok((w, h, body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()))
}

impl Canvas {
    /// Builds a canvas from parsed PPM content; provenance is unknown.
    pub fn from_ppm(spec: CanvasSpec, bytes: &[u8]) -> Result<Self, CanvasError> {
        let (w, h, rgb) = parse_ppm(bytes)?;
        let mut c = Self::blank(spec, w, h);
        c.rgb = rgb;
        Ok(c)
    }

    pub fn rgb(&self) -> &[[u8; 3]] {
        &self.rgb
    }
}

/// Every pixel the segment between two pixel centres passes through. When
/// the line crosses a pixel corner exactly, both side neighbours are included.
pub fn supercover_line((x0, y0): (i64, i64), (x1, y1): (i64, i64)) -> Vec<(i64, i64)> {
    let (dx, dy) = (x1 - x0, y1 - y0);
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());
    let (mut x, mut y) = (x0, y0);
    let mut out = vec![(x, y)];
    let (mut ix, mut iy) = (0, 0);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            out.push((x + sx, y));
            out.push((x, y + sy));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        out.push((x, y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(w: f64, h: f64, ppm: f64) -> CanvasSpec {
        CanvasSpec { width_mm: w, height_mm: h, px_per_mm: ppm }
    }

    fn stroke(id: u64, color: [u8; 3], width: f64, path: Vec<Point>) -> Stroke {
        Stroke { id, author: Author::Robot, color, width_mm: width, path }
    }

    fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
        let (vx, vy) = (b.0 - a.0, b.1 - a.1);
        let len2 = vx * vx + vy * vy;
        let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0) };
        ((p.0 - a.0 - t * vx).powi(2) + (p.1 - a.1 - t * vy).powi(2)).sqrt()
    }

    #[test]
    fn horizontal_stroke_matches_distance_oracle() {
        let mut c = Canvas::new(spec(40.0, 20.0, 1.0)).unwrap();
        let s = stroke(1, [0, 0, 0], 1.0, vec![(5.0, 10.0), (15.0, 10.0)]);
        c.rasterize_stroke(&s).unwrap();
        // radius = ceil(1 * 1 / 2) = 1 px; segment between pixel (5,10) and (15,10).
        let (w, h) = c.dims();
        let mut expected = 0;
        for y in 0..h {
            for x in 0..w {
                let inside = dist_to_segment((x as f64, y as f64), (5.0, 10.0), (15.0, 10.0)) <= 1.0;
                assert_eq!(c.pixel(x, y) != WHITE, inside, "pixel ({x},{y})");
                expected += usize::from(inside);
            }
        }
        // 11 centre pixels plus a row above and below, plus the two end caps.
        assert_eq!(expected, 35);
        assert_eq!(c.authored_pixels(Author::Robot).count(), 35);
    }

    #[test]
    fn degenerate_path_stamps_one_disc() {
        let mut c = Canvas::new(spec(20.0, 20.0, 1.0)).unwrap();
        let written = c.rasterize_stroke(&stroke(1, [0, 0, 0], 4.0, vec![(10.0, 10.0), (10.0, 10.0)])).unwrap();
        // radius 2: lattice points with dx^2 + dy^2 <= 4.
        assert_eq!(written.len(), 13);
    }

    #[test]
    fn last_writer_wins() {
        let mut c = Canvas::new(spec(20.0, 20.0, 1.0)).unwrap();
        c.rasterize_stroke(&stroke(1, [255, 0, 0], 2.0, vec![(2.0, 10.0), (18.0, 10.0)])).unwrap();
        let mut s2 = stroke(2, [0, 0, 255], 2.0, vec![(10.0, 2.0), (10.0, 18.0)]);
        s2.author = Author::Artist;
        c.rasterize_stroke(&s2).unwrap();
        assert_eq!(c.pixel(10, 10), [0, 0, 255]);
        assert_eq!(c.provenance(10, 10), Some(Provenance { author: Author::Artist, stroke_id: 2 }));
        assert_eq!(c.pixel(3, 10), [255, 0, 0]);
    }

    #[test]
    fn out_of_bounds_stroke_is_rejected() {
        let mut c = Canvas::new(spec(20.0, 20.0, 1.0)).unwrap();
        let err = c.rasterize_stroke(&stroke(1, [0, 0, 0], 1.0, vec![(1.0, 1.0), (25.0, 1.0)]));
        assert!(matches!(err, Err(CanvasError::OutOfBounds(..))));
        assert_eq!(c.authored_pixels(Author::Robot).count(), 0);
    }

    #[test]
    fn blank_digest_matches_reference_fnv() {
        let c = Canvas::new(spec(2.0, 2.0, 1.0)).unwrap();
        // FNV-1a 64 of twelve 0xFF bytes.
        assert_eq!(c.digest(), 0x9378_30ad_34fe_6de9);
    }

    #[test]
    fn ppm_format() {
        let c = Canvas::new(spec(2.0, 2.0, 1.0)).unwrap();
        let ppm = c.export_ppm();
        assert_eq!(&ppm[..11], b"P6\n2 2\n255\n");
        assert_eq!(&ppm[11..], &[0xFF; 12]);
        let back = Canvas::from_ppm(*c.spec(), &ppm).unwrap();
        assert_eq!(back.rgb(), c.rgb());

        let mut one = Canvas::new(spec(2.0, 2.0, 1.0)).unwrap();
        one.width = 1;
        one.height = 1;
        one.rgb = vec![[0, 0, 0]];
        assert_eq!(one.export_ppm(), b"P6\n1 1\n255\n\0\0\0".to_vec());
    }

    #[test]
    fn ppm_rejects_garbage() {
        assert!(parse_ppm(b"P3\n1 1\n255\n000").is_err());
        assert!(parse_ppm(b"P6\n2 2\n255\n\xff").is_err());
        assert!(parse_ppm(b"P6\n2").is_err());
    }

    #[test]
    fn supercover_visits_corner_neighbours() {
        let line = supercover_line((0, 0), (2, 2));
        assert_eq!(line, vec![(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)]);
        assert_eq!(supercover_line((3, 3), (3, 3)), vec![(3, 3)]);
        assert_eq!(supercover_line((0, 0), (-3, 0)), vec![(0, 0), (-1, 0), (-2, 0), (-3, 0)]);
    }

    proptest! {
        #[test]
        fn supercover_is_4_connected(x0 in -20i64..20, y0 in -20i64..20, x1 in -20i64..20, y1 in -20i64..20) {
            let line = supercover_line((x0, y0), (x1, y1));
            prop_assert_eq!(line[0], (x0, y0));
            prop_assert_eq!(*line.last().unwrap(), (x1, y1));
            for p in &line {
                // Every visited pixel is within reach of the ideal segment.
                let d = dist_to_segment((p.0 as f64, p.1 as f64), (x0 as f64, y0 as f64), (x1 as f64, y1 as f64));
                prop_assert!(d <= std::f64::consts::SQRT_2 / 2.0 + 1e-9 || d <= 1.0);
            }
        }

        #[test]
        fn stamped_region_brackets_the_distance_oracle(
            ax in 5.0f64..35.0, ay in 5.0f64..35.0, bx in 5.0f64..35.0, by in 5.0f64..35.0, width in 1.0f64..6.0,
        ) {
            let mut c = Canvas::new(spec(40.0, 40.0, 1.0)).unwrap();
            c.rasterize_stroke(&stroke(1, [0, 0, 0], width, vec![(ax, ay), (bx, by)])).unwrap();
            let r = (width / 2.0).ceil();
            let a = (ax.floor(), ay.floor());
            let b = (bx.floor(), by.floor());
            for y in 0..40 {
                for x in 0..40 {
                    let d = dist_to_segment((x as f64, y as f64), a, b);
                    let painted = c.pixel(x, y) != WHITE;
                    if d <= r - 1.0 { prop_assert!(painted, "({},{}) d={}", x, y, d); }
                    if painted { prop_assert!(d <= r + 1.0, "({},{}) d={}", x, y, d); }
                }
            }
        }

        #[test]
        fn single_pixel_change_changes_digest(x in 0usize..8, y in 0usize..6, v in 0u8..255, ch in 0usize..3) {
            let mut c = Canvas::new(spec(8.0, 6.0, 1.0)).unwrap();
            let before = c.digest();
            let mut px = c.pixel(x, y);
            px[ch] = v;
            c.set_pixel(x, y, px, None);
            prop_assert_ne!(c.digest(), before);
        }

        #[test]
        fn disjoint_strokes_commute(order in proptest::bool::ANY) {
            let s1 = stroke(1, [10, 20, 30], 2.0, vec![(2.0, 2.0), (15.0, 5.0)]);
            let s2 = stroke(2, [90, 20, 30], 2.0, vec![(25.0, 30.0), (35.0, 35.0)]);
            let mut a = Canvas::new(spec(40.0, 40.0, 1.0)).unwrap();
            let mut b = a.clone();
            a.rasterize_stroke(&s1).unwrap();
            a.rasterize_stroke(&s2).unwrap();
            if order { b.rasterize_stroke(&s2).unwrap(); b.rasterize_stroke(&s1).unwrap(); }
            else { b.rasterize_stroke(&s1).unwrap(); b.rasterize_stroke(&s2).unwrap(); }
            prop_assert_eq!(a.digest(), b.digest());
        }
    }
}
