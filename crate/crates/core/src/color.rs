//! Color-space conversions, the Individual Typology Angle and Fitzpatrick binning.
//!
//! sRGB values go through the standard piecewise transfer function into
//! linear RGB, then into CIE XYZ under D65 (2° observer) and finally CIELAB.
//! All intermediate math is `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{LabImage, Raster, RgbImage};

/// 8-bit sRGB-encoded pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SrgbPixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl SrgbPixel {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

/// CIELAB pixel. `l` is lightness in [0, 100], `a` the green-red axis and
/// `b` the blue-yellow axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabPixel {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabPixel {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Reference white in XYZ, normalized so that `y == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WhitePoint {
    /// D65, 2° observer. Matches the row sums of [`SRGB_TO_XYZ`] so sRGB
    /// white lands exactly on the achromatic axis.
    pub const D65: WhitePoint = WhitePoint {
        x: 0.95047,
        y: 1.0,
        z: 1.08883,
    };
}

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const LAB_DELTA: f64 = 6.0 / 29.0;

/// sRGB transfer function, encoded value in [0, 1] to linear light.
pub fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_decode`].
pub fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * LAB_DELTA * LAB_DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > LAB_DELTA {
        t.powi(3)
    } else {
        3.0 * LAB_DELTA * LAB_DELTA * (t - 4.0 / 29.0)
    }
}

/// Linear RGB (each channel nominally in [0, 1]) to CIELAB.
pub fn linear_rgb_to_lab(rgb: [f64; 3], white: WhitePoint) -> LabPixel {
    let [x, y, z] = mat_mul(&SRGB_TO_XYZ, rgb);
    let fx = lab_f(x / white.x);
    let fy = lab_f(y / white.y);
    let fz = lab_f(z / white.z);
    LabPixel {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// CIELAB to unclamped linear RGB.
pub fn lab_to_linear_rgb(p: LabPixel, white: WhitePoint) -> [f64; 3] {
    let fy = (p.l + 16.0) / 116.0;
    let fx = fy + p.a / 500.0;
    let fz = fy - p.b / 200.0;
    let xyz = [
        white.x * lab_f_inv(fx),
        white.y * lab_f_inv(fy),
        white.z * lab_f_inv(fz),
    ];
    mat_mul(&XYZ_TO_SRGB, xyz)
}

pub fn srgb_to_lab(p: SrgbPixel, white: WhitePoint) -> LabPixel {
    let lin = p.channels().map(|c| srgb_decode(f64::from(c) / 255.0));
    linear_rgb_to_lab(lin, white)
}

/// Encodes linear RGB to 8-bit sRGB, clamping out-of-gamut channels.
pub fn linear_rgb_to_srgb(rgb: [f64; 3]) -> SrgbPixel {
    let [r, g, b] = rgb.map(|c| {
        let c = if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.0 };
        (srgb_encode(c) * 255.0).round().clamp(0.0, 255.0) as u8
    });
    SrgbPixel { r, g, b }
}

/// Inverse of [`srgb_to_lab`] under D65. Out-of-gamut colors are clamped.
pub fn lab_to_srgb(p: LabPixel) -> SrgbPixel {
    linear_rgb_to_srgb(lab_to_linear_rgb(p, WhitePoint::D65))
}

/// Hexcone HSV: hue in degrees [0, 360), saturation and value in [0, 1].
/// Achromatic pixels get hue 0.
pub fn srgb_to_hsv(p: SrgbPixel) -> (f64, f64, f64) {
    let r = f64::from(p.r) / 255.0;
    let g = f64::from(p.g) / 255.0;
    let b = f64::from(p.b) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let mut h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

/// HSV value channel, `max(r, g, b) / 255`.
pub fn hsv_value(p: SrgbPixel) -> f64 {
    f64::from(p.r.max(p.g).max(p.b)) / 255.0
}

/// Individual Typology Angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItaDegrees(pub f64);

impl ItaDegrees {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItaVariant {
    /// `atan((L* - 50) / b*)`, range (-90, 90), undefined at `b* = 0`.
    #[default]
    Arctan,
    /// `atan2(L* - 50, b*)`, range (-180, 180].
    Arctan2,
}

pub fn ita(l_star: f64, b_star: f64, variant: ItaVariant) -> Result<ItaDegrees> {
    if !l_star.is_finite() || !b_star.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "non-finite Lab input (L*={l_star}, b*={b_star})"
        )));
    }
    let radians = match variant {
        ItaVariant::Arctan => {
            if b_star == 0.0 {
                return Err(Error::DegenerateInput("ITA (arctan) is undefined for b* = 0".into()));
            }
            ((l_star - 50.0) / b_star).atan()
        }
        // Right half-plane shares the arctan path so both variants agree bitwise there.
        ItaVariant::Arctan2 if b_star > 0.0 => ((l_star - 50.0) / b_star).atan(),
        ItaVariant::Arctan2 => (l_star - 50.0).atan2(b_star),
    };
    let mut deg = radians.to_degrees();
    if deg <= -180.0 {
        deg = 180.0;
    }
    Ok(ItaDegrees(deg))
}

/// Fitzpatrick skin type, I (1) through VI (6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FitzpatrickType(u8);

impl FitzpatrickType {
    pub const COUNT: usize = 6;

    pub fn new(index: u8) -> Result<Self> {
        if (1..=6).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::OutOfRange(format!(
                "Fitzpatrick type must be in 1..=6, got {index}"
            )))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Zero-based index, convenient for 6-element tables.
    pub fn zero_based(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_zero_based(i: usize) -> Result<Self> {
        u8::try_from(i + 1)
            .map_err(|_| Error::OutOfRange(format!("class index {i}")))
            .and_then(Self::new)
    }

    pub fn all() -> impl Iterator<Item = FitzpatrickType> {
        (1..=6).map(FitzpatrickType)
    }

    pub fn roman(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI"][self.zero_based()]
    }
}

impl TryFrom<u8> for FitzpatrickType {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FitzpatrickType> for u8 {
    fn from(t: FitzpatrickType) -> u8 {
        t.0
    }
}

impl std::fmt::Display for FitzpatrickType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.roman())
    }
}

/// Five strictly decreasing ITA boundaries, I|II through V|VI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct ItaThresholds([f64; 5]);

impl ItaThresholds {
    pub fn new(boundaries: [f64; 5]) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidThresholds(format!(
                "non-finite boundary in {boundaries:?}"
            )));
        }
        if boundaries.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidThresholds(format!(
                "boundaries must be strictly decreasing, got {boundaries:?}"
            )));
        }
        Ok(Self(boundaries))
    }

    pub fn boundaries(&self) -> [f64; 5] {
        self.0
    }
}

impl Default for ItaThresholds {
    fn default() -> Self {
        Self([55.0, 41.0, 28.0, 19.0, 10.0])
    }
}

impl TryFrom<[f64; 5]> for ItaThresholds {
    type Error = Error;
    fn try_from(v: [f64; 5]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ItaThresholds> for [f64; 5] {
    fn from(t: ItaThresholds) -> Self {
        t.0
    }
}

/// Bins an ITA value. Boundaries are exclusive upward: an ITA equal to a
/// boundary falls into the darker type.
pub fn ita_to_fitzpatrick(ita: ItaDegrees, t: &ItaThresholds) -> FitzpatrickType {
    let above = t.0.iter().take_while(|&&b| ita.0 <= b).count();
    FitzpatrickType(above as u8 + 1)
}

/// Checked variant of [`ita_to_fitzpatrick`] for raw boundary arrays.
pub fn ita_to_fitzpatrick_checked(ita: ItaDegrees, boundaries: [f64; 5]) -> Result<FitzpatrickType> {
    let t = ItaThresholds::new(boundaries)?;
    Ok(ita_to_fitzpatrick(ita, &t))
}

pub fn srgb_image_to_lab(img: &RgbImage, white: WhitePoint) -> LabImage {
    // 8-bit input only has 256 levels per channel; decode once.
    let lut: Vec<f64> = (0..=255u8).map(|c| srgb_decode(f64::from(c) / 255.0)).collect();
    let n = img.len();
    let mut l = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for p in img.data() {
        let lin = [lut[p.r as usize], lut[p.g as usize], lut[p.b as usize]];
        let lab = linear_rgb_to_lab(lin, white);
        l.push(lab.l);
        a.push(lab.a);
        b.push(lab.b);
    }
    let (w, h) = img.dims();
    LabImage {
        l: Raster::from_vec(w, h, l).expect("dims from source image"),
        a: Raster::from_vec(w, h, a).expect("dims from source image"),
        b: Raster::from_vec(w, h, b).expect("dims from source image"),
    }
}

pub fn lab_image_to_srgb(img: &LabImage) -> RgbImage {
    let (w, h) = img.dims();
    let data = (0..img.len()).map(|i| lab_to_srgb(img.pixel_at(i))).collect();
    Raster::from_vec(w, h, data).expect("dims from source image")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar sRGB -> Lab chain written from the CIE constants
    /// (kappa/epsilon form), sharing no helpers with the module.
    fn oracle_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
        let lin = |c: u8| {
            let v = c as f64 / 255.0;
            if v > 0.04045 {
                ((v + 0.055) / 1.055).powf(2.4)
            } else {
                v / 12.92
            }
        };
        let (r, g, b) = (lin(r), lin(g), lin(b));
        let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        let eps = 216.0 / 24389.0;
        let kappa = 24389.0 / 27.0;
        let f = |t: f64| {
            if t > eps {
                t.powf(1.0 / 3.0)
            } else {
                (kappa * t + 16.0) / 116.0
            }
        };
        let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
        (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
    }

    #[test]
    fn white_and_black() {
        let w = srgb_to_lab(SrgbPixel::new(255, 255, 255), WhitePoint::D65);
        assert!((w.l - 100.0).abs() < 1e-4);
        assert!(w.a.abs() < 0.01 && w.b.abs() < 0.01);
        let k = srgb_to_lab(SrgbPixel::new(0, 0, 0), WhitePoint::D65);
        assert!(k.l.abs() < 1e-12 && k.a.abs() < 1e-12 && k.b.abs() < 1e-12);
    }

    #[test]
    fn mid_gray_matches_oracle() {
        let p = srgb_to_lab(SrgbPixel::new(128, 128, 128), WhitePoint::D65);
        let (l, a, b) = oracle_lab(128, 128, 128);
        assert!((p.l - l).abs() < 1e-9);
        // frozen from an external reference conversion
        assert!((p.l - 53.5850).abs() < 1e-3);
        assert!(a.abs() < 0.01 && b.abs() < 0.01);
        assert!(p.a.abs() < 0.01 && p.b.abs() < 0.01);
    }

    #[test]
    fn oracle_agreement_on_grid() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(15) {
                for b in (0..=255).step_by(51) {
                    let p = srgb_to_lab(SrgbPixel::new(r, g, b), WhitePoint::D65);
                    let (l, a, bb) = oracle_lab(r, g, b);
                    assert!((p.l - l).abs() < 1e-9, "{r},{g},{b}");
                    assert!((p.a - a).abs() < 1e-9);
                    assert!((p.b - bb).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn lab_to_srgb_white_and_clamping() {
        assert_eq!(
            lab_to_srgb(LabPixel::new(100.0, 0.0, 0.0)),
            SrgbPixel::new(255, 255, 255)
        );
        // extreme chroma values must clamp without panicking
        for a in [-500.0, -200.0, 0.0, 200.0, 500.0] {
            for b in [-500.0, -200.0, 0.0, 200.0, 500.0] {
                for l in [0.0, 50.0, 100.0] {
                    let _ = lab_to_srgb(LabPixel::new(l, a, b));
                }
            }
        }
        let _ = lab_to_srgb(LabPixel::new(50.0, 200.0, 200.0));
    }

    #[test]
    fn round_trip_coarse_grid() {
        for r in (0..=255u16).step_by(5) {
            for g in (0..=255u16).step_by(5) {
                for b in (0..=255u16).step_by(5) {
                    let p = SrgbPixel::new(r as u8, g as u8, b as u8);
                    let q = lab_to_srgb(srgb_to_lab(p, WhitePoint::D65));
                    for (x, y) in p.channels().iter().zip(q.channels()) {
                        assert!((*x as i16 - y as i16).abs() <= 1, "{p:?} -> {q:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hsv_examples() {
        assert_eq!(srgb_to_hsv(SrgbPixel::new(255, 0, 0)), (0.0, 1.0, 1.0));
        assert_eq!(srgb_to_hsv(SrgbPixel::new(128, 128, 128)), (0.0, 0.0, 128.0 / 255.0));
        let (h, s, v) = srgb_to_hsv(SrgbPixel::new(64, 128, 192));
        // direct evaluation: max = b, h = 60 * ((r - g) / delta + 4)
        let (r, g, b) = (64.0 / 255.0, 128.0 / 255.0, 192.0 / 255.0);
        let delta: f64 = b - r;
        assert!((h - 60.0 * ((r - g) / delta + 4.0)).abs() < 1e-12);
        assert!((h - 210.0).abs() < 1e-9);
        assert!((s - delta / b).abs() < 1e-12);
        assert!((v - b).abs() < 1e-12);
    }

    #[test]
    fn ita_examples() {
        assert_eq!(ita(50.0, 10.0, ItaVariant::Arctan).unwrap().0, 0.0);
        assert_eq!(ita(60.0, 10.0, ItaVariant::Arctan).unwrap().0, 45.0);
        assert_eq!(ita(40.0, 10.0, ItaVariant::Arctan).unwrap().0, -45.0);
        let v = ita(40.0, -10.0, ItaVariant::Arctan2).unwrap().0;
        assert!((v - (-135.0)).abs() < 1e-12);
        assert!(matches!(
            ita(60.0, 0.0, ItaVariant::Arctan),
            Err(Error::DegenerateInput(_))
        ));
        assert_eq!(ita(60.0, 0.0, ItaVariant::Arctan2).unwrap().0, 90.0);
    }

    #[test]
    fn ita_atan2_quadrants() {
        // quadrant table of atan2(y, x) in degrees
        let table = [
            ((60.0, 10.0), 45.0),
            ((60.0, -10.0), 135.0),
            ((40.0, -10.0), -135.0),
            ((40.0, 10.0), -45.0),
            ((50.0, -10.0), 180.0),
        ];
        for ((l, b), want) in table {
            let got = ita(l, b, ItaVariant::Arctan2).unwrap().0;
            assert!((got - want).abs() < 1e-12, "({l},{b}) -> {got}");
            assert!(got > -180.0 && got <= 180.0);
        }
    }

    #[test]
    fn fitzpatrick_binning() {
        let t = ItaThresholds::default();
        let fp = |v| ita_to_fitzpatrick(ItaDegrees(v), &t).index();
        assert_eq!(fp(60.0), 1);
        assert_eq!(fp(55.0), 2);
        assert_eq!(fp(41.0), 3);
        assert_eq!(fp(30.0), 3);
        assert_eq!(fp(20.0), 4);
        assert_eq!(fp(19.0), 5);
        assert_eq!(fp(10.0), 6);
        assert_eq!(fp(-5.0), 6);
        assert!(matches!(
            ItaThresholds::new([55.0, 41.0, 41.0, 19.0, 10.0]),
            Err(Error::InvalidThresholds(_))
        ));
        assert!(ita_to_fitzpatrick_checked(ItaDegrees(0.0), [1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn fitzpatrick_serde_rejects_out_of_range() {
        assert!(serde_json::from_str::<FitzpatrickType>("7").is_err());
        assert_eq!(serde_json::from_str::<FitzpatrickType>("3").unwrap().index(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ita_monotone_in_l(l1 in 0.0f64..100.0, dl in 0.01f64..50.0, b in 0.1f64..60.0) {
                let a = ita(l1, b, ItaVariant::Arctan).unwrap().0;
                let c = ita(l1 + dl, b, ItaVariant::Arctan).unwrap().0;
                prop_assert!(c > a);
            }

            #[test]
            fn ita_decreasing_in_b(l in 50.01f64..100.0, b1 in 0.1f64..60.0, db in 0.01f64..30.0) {
                let a = ita(l, b1, ItaVariant::Arctan).unwrap().0;
                let c = ita(l, b1 + db, ItaVariant::Arctan).unwrap().0;
                prop_assert!(c < a);
            }

            #[test]
            fn variants_agree_for_positive_b(l in 0.0f64..100.0, b in 1e-6f64..100.0) {
                let a = ita(l, b, ItaVariant::Arctan).unwrap().0;
                let c = ita(l, b, ItaVariant::Arctan2).unwrap().0;
                prop_assert_eq!(a, c);
            }

            #[test]
            fn binning_monotone(x in -90.0f64..90.0, dx in 0.0f64..60.0) {
                let t = ItaThresholds::default();
                let lo = ita_to_fitzpatrick(ItaDegrees(x), &t);
                let hi = ita_to_fitzpatrick(ItaDegrees(x + dx), &t);
                prop_assert!(hi <= lo);
            }
        }
    }
}
