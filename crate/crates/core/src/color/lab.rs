//! sRGB <-> CIE L*a*b* conversion under the D65 reference white.

use serde::{Deserialize, Serialize};

/// D65 reference white in XYZ, normalized so that Y = 1.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

// The exact inverse of the matrix above; the usual 7-digit published inverse
// drifts by ~1e-5 ΔE per round trip.
const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404548360214087, -1.5371388501025751, -0.498531546868481],
    [-0.9692663898756538, 1.876010928842491, 0.041556082346673545],
    [0.05564341960421367, -0.20402585426769818, 1.057225162457929],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// A color in CIE L*a*b* space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub const BLACK: LabColor = LabColor { l: 0.0, a: 0.0, b: 0.0 };
    pub const WHITE: LabColor = LabColor {
        l: 100.0,
        a: 0.0,
        b: 0.0,
    };

    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn from_srgb8(rgb: [u8; 3]) -> Self {
        srgb_to_lab(rgb)
    }

    pub fn to_srgb8(self) -> [u8; 3] {
        lab_to_srgb(self)
    }

    /// CIE76 color difference (Euclidean distance in Lab).
    pub fn delta_e76(self, other: LabColor) -> f64 {
        let dl = self.l - other.l;
        let da = self.a - other.a;
        let db = self.b - other.b;
        (dl * dl + da * da + db * db).sqrt()
    }

    pub fn lerp(self, other: LabColor, f: f64) -> LabColor {
        LabColor {
            l: self.l + (other.l - self.l) * f,
            a: self.a + (other.a - self.a) * f,
            b: self.b + (other.b - self.b) * f,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

fn decode_gamma(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn encode_gamma(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// Converts gamma-encoded sRGB channels in `[0, 1]` to Lab.
pub fn srgb_unit_to_lab(rgb: [f64; 3]) -> LabColor {
    let linear = rgb.map(decode_gamma);
    let xyz = mul3(&SRGB_TO_XYZ, linear);
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Converts Lab to gamma-encoded sRGB in `[0, 1]`, clamping out-of-gamut channels.
pub fn lab_to_srgb_unit(lab: LabColor) -> [f64; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    mul3(&XYZ_TO_SRGB, xyz).map(|c| encode_gamma(c.clamp(0.0, 1.0)).clamp(0.0, 1.0))
}

pub fn srgb_to_lab(rgb: [u8; 3]) -> LabColor {
    srgb_unit_to_lab(rgb.map(|c| c as f64 / 255.0))
}

/// Lab to 8-bit sRGB; out-of-gamut channels are clamped to `[0, 255]`.
pub fn lab_to_srgb(lab: LabColor) -> [u8; 3] {
    lab_to_srgb_unit(lab).map(|c| (c * 255.0).round() as u8)
}

pub fn hex_string(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Parses `#rrggbb` or `rrggbb`.
pub fn parse_hex(s: &str) -> Option<[u8; 3]> {
    let s = s.trim().trim_start_matches('#');
    if s.len() != 6 || !s.is_ascii() {
        return None;
    }
    let channel = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).ok();
    Some([channel(0)?, channel(2)?, channel(4)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrices_are_inverse() {
        for (k, e) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .into_iter()
            .enumerate()
        {
            let back = mul3(&XYZ_TO_SRGB, mul3(&SRGB_TO_XYZ, e));
            for (i, v) in back.iter().enumerate() {
                assert!((v - if i == k { 1.0 } else { 0.0 }).abs() < 1e-14, "{back:?}");
            }
        }
    }

    #[test]
    fn reference_white_and_black() {
        let w = srgb_to_lab([255, 255, 255]);
        assert!((w.l - 100.0).abs() < 0.01);
        assert!(w.a.abs() < 0.01 && w.b.abs() < 0.01);
        let k = srgb_to_lab([0, 0, 0]);
        assert!(k.l.abs() < 0.01 && k.a.abs() < 0.01 && k.b.abs() < 0.01);
    }

    #[test]
    fn pure_red() {
        // Independent scalar evaluation of sRGB -> XYZ(D65) -> Lab.
        let r = srgb_to_lab([255, 0, 0]);
        assert!((r.l - 53.2408).abs() < 0.1);
        assert!((r.a - 80.0925).abs() < 0.1);
        assert!((r.b - 67.2032).abs() < 0.1);
    }

    #[test]
    fn out_of_gamut_clamps() {
        assert_eq!(lab_to_srgb(LabColor::new(50.0, 200.0, -200.0))[1], 0);
        assert_eq!(lab_to_srgb(LabColor::new(120.0, 0.0, 0.0)), [255, 255, 255]);
        assert_eq!(lab_to_srgb(LabColor::new(-10.0, 0.0, 0.0)), [0, 0, 0]);
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(parse_hex("#ff8000"), Some([255, 128, 0]));
        assert_eq!(hex_string([255, 128, 0]), "#ff8000");
        assert_eq!(parse_hex("#ff80"), None);
        assert_eq!(parse_hex("zzzzzz"), None);
    }

    proptest! {
        #[test]
        fn srgb_round_trip_within_one_count(r: u8, g: u8, b: u8) {
            let back = lab_to_srgb(srgb_to_lab([r, g, b]));
            for (x, y) in back.iter().zip([r, g, b]) {
                prop_assert!((*x as i32 - y as i32).abs() <= 1);
            }
        }

        #[test]
        fn in_gamut_lab_round_trip(r: u8, g: u8, b: u8) {
            let lab = srgb_to_lab([r, g, b]);
            let again = srgb_to_lab(lab_to_srgb(lab));
            prop_assert!(lab.delta_e76(again) < 0.5);
        }
    }
}
