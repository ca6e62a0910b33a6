//! ParaView colormap XML and PNG strip exporters.

use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};
use quick_xml::events::Event;
use quick_xml::Reader;

use super::{lab_to_srgb_unit, srgb_unit_to_lab, ColorError, ColorMap, ControlPoint};

pub const STRIP_WIDTH: u32 = 1024;
pub const STRIP_HEIGHT: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Xml,
    PngStrip,
}

pub fn export_colormap(map: &ColorMap, format: ExportFormat) -> Result<Vec<u8>, ColorError> {
    match format {
        ExportFormat::Xml => Ok(to_paraview_xml(map).into_bytes()),
        ExportFormat::PngStrip => {
            let mut out = Cursor::new(Vec::new());
            strip_image(map)
                .write_to(&mut out, ImageFormat::Png)
                .map_err(|e| ColorError::Encode(e.to_string()))?;
            Ok(out.into_inner())
        }
    }
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn to_paraview_xml(map: &ColorMap) -> String {
    let mut xml = format!(
        "<ColorMaps><ColorMap name=\"{}\" space=\"Lab\">",
        escape_attr(map.name())
    );
    for p in map.points() {
        let [r, g, b] = lab_to_srgb_unit(p.color);
        xml.push_str(&format!(
            "<Point x=\"{}\" o=\"1\" r=\"{}\" g=\"{}\" b=\"{}\"/>",
            p.position, r, g, b
        ));
    }
    xml.push_str("</ColorMap></ColorMaps>");
    xml
}

/// 1024x32 strip; column `c` holds the colormap sampled at `c / 1023`.
pub fn strip_image(map: &ColorMap) -> RgbImage {
    let columns: Vec<[u8; 3]> = (0..STRIP_WIDTH)
        .map(|c| map.sample_srgb8(c as f64 / (STRIP_WIDTH - 1) as f64))
        .collect();
    RgbImage::from_fn(STRIP_WIDTH, STRIP_HEIGHT, |x, _| Rgb(columns[x as usize]))
}

/// Parses the first `ColorMap` element of a ParaView colormap XML document.
pub fn from_paraview_xml(xml: &str) -> Result<ColorMap, ColorError> {
    let mut reader = Reader::from_str(xml);
    let mut name: Option<String> = None;
    let mut points = Vec::new();
    let mut in_map = false;
    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| ColorError::Xml(format!("offset {pos}: {e}")))?;
        match event {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                b"ColorMap" if name.is_none() => {
                    in_map = true;
                    let mut n = String::new();
                    for attr in e.attributes() {
                        let attr = attr.map_err(|e| ColorError::Xml(e.to_string()))?;
                        if attr.key.as_ref() == b"name" {
                            n = attr
                                .unescape_value()
                                .map_err(|e| ColorError::Xml(e.to_string()))?
                                .into_owned();
                        }
                    }
                    name = Some(n);
                }
                b"Point" if in_map => {
                    let mut vals = [None::<f64>; 4];
                    for attr in e.attributes() {
                        let attr = attr.map_err(|e| ColorError::Xml(e.to_string()))?;
                        let slot = match attr.key.as_ref() {
                            b"x" => 0,
                            b"r" => 1,
                            b"g" => 2,
                            b"b" => 3,
                            _ => continue,
                        };
                        let text = attr.unescape_value().map_err(|e| ColorError::Xml(e.to_string()))?;
                        let v: f64 = text
                            .trim()
                            .parse()
                            .map_err(|_| ColorError::Xml(format!("offset {pos}: bad number {text:?}")))?;
                        vals[slot] = Some(v);
                    }
                    match vals {
                        [Some(x), Some(r), Some(g), Some(b)] => points.push(ControlPoint {
                            position: x,
                            color: srgb_unit_to_lab([r, g, b]),
                        }),
                        _ => return Err(ColorError::Xml(format!("offset {pos}: Point requires x, r, g and b"))),
                    }
                }
                _ => {}
            },
            Event::End(e) if e.name().as_ref() == b"ColorMap" => in_map = false,
            Event::Eof => break,
            _ => {}
        }
    }
    let name = name.ok_or_else(|| ColorError::Xml("no ColorMap element".into()))?;
    ColorMap::new(name, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{srgb_to_lab, LabColor};
    use proptest::prelude::*;

    fn bw() -> ColorMap {
        ColorMap::evenly_spaced("gray & co", &[LabColor::BLACK, LabColor::WHITE]).unwrap()
    }

    #[test]
    fn png_strip_endpoints() {
        let bytes = export_colormap(&bw(), ExportFormat::PngStrip).unwrap();
        let img = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (1024, 32));
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(1023, 31).0, [255, 255, 255]);
    }

    #[test]
    fn xml_layout() {
        let xml = to_paraview_xml(&bw());
        assert!(xml.starts_with("<ColorMaps><ColorMap name=\"gray &amp; co\" space=\"Lab\"><Point x=\"0\" o=\"1\" r=\"0\" g=\"0\" b=\"0\"/>"));
        assert!(xml.ends_with("</ColorMap></ColorMaps>"));
        assert_eq!(xml.matches("<Point ").count(), 2);
        assert!(xml.contains("<Point x=\"1\" o=\"1\""));
    }

    #[test]
    fn xml_errors() {
        assert!(from_paraview_xml("<ColorMaps></ColorMaps>").is_err());
        assert!(
            from_paraview_xml("<ColorMaps><ColorMap name=\"a\"><Point x=\"0\" r=\"1\"/></ColorMap></ColorMaps>")
                .is_err()
        );
        assert!(from_paraview_xml("<ColorMaps><ColorMap name=\"a\"><Point x=\"q\" r=\"1\" g=\"1\" b=\"1\"/>").is_err());
    }

    #[test]
    fn accepts_paraview_style_documents() {
        let xml = r#"<?xml version="1.0"?>
<ColorMaps>
  <ColorMap name="Cool" space="Diverging">
    <Point x="-1" o="1" r="0.23" g="0.299" b="0.754"/>
    <Point x="1" o="1" r="0.706" g="0.016" b="0.15"/>
  </ColorMap>
</ColorMaps>"#;
        let map = from_paraview_xml(xml).unwrap();
        assert_eq!(map.name(), "Cool");
        assert_eq!(map.points()[0].position, 0.0);
        assert_eq!(map.points()[1].position, 1.0);
    }

    proptest! {
        #[test]
        fn xml_round_trip(
            raw in proptest::collection::vec((0.0f64..1.0, any::<[u8; 3]>()), 2..8)
        ) {
            let mut raw = raw;
            raw.sort_by(|a, b| a.0.total_cmp(&b.0));
            raw.dedup_by(|a, b| a.0 == b.0);
            prop_assume!(raw.len() >= 2);
            let points: Vec<_> = raw
                .iter()
                .map(|(p, rgb)| ControlPoint { position: *p, color: srgb_to_lab(*rgb) })
                .collect();
            let map = ColorMap::new("p", points).unwrap();
            let back = from_paraview_xml(&to_paraview_xml(&map)).unwrap();
            prop_assert_eq!(back.points().len(), map.points().len());
            for (a, b) in map.points().iter().zip(back.points()) {
                prop_assert_eq!(a.position.to_bits(), b.position.to_bits());
                let ca = lab_to_srgb_unit(a.color);
                let cb = lab_to_srgb_unit(b.color);
                for k in 0..3 {
                    prop_assert!((ca[k] - cb[k]).abs() <= 1.0 / 255.0);
                }
            }
        }
    }
}
