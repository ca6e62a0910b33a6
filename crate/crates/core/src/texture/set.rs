use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::{make_normal_map, NormalMap, TextureError, TextureImage};

/// Textures ordered by increasing visual magnitude, entry `k` encoding bin `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSet {
    pub name: String,
    pub images: Vec<TextureImage>,
    pub normal_maps: Option<Vec<NormalMap>>,
    pub alpha_masks: Option<Vec<GrayImage>>,
}

#[derive(Debug, Clone, Default)]
pub struct SetOptions {
    pub name: String,
    /// One strength shared by every entry's normal map.
    pub normal_strength: Option<f64>,
    /// Bilinearly resample mixed sizes to the largest entry instead of failing.
    pub resample: bool,
}

impl TextureSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.images[0].pixels.dimensions()
    }

    pub fn single(name: impl Into<String>, image: TextureImage) -> Self {
        Self {
            name: name.into(),
            images: vec![image],
            normal_maps: None,
            alpha_masks: None,
        }
    }

    fn check(&self) -> Result<(), TextureError> {
        if self.images.is_empty() {
            return Err(TextureError::EmptySet);
        }
        let dims = self.dimensions();
        let mut sizes: Vec<(u32, u32)> = self.images.iter().map(|i| i.pixels.dimensions()).collect();
        if let Some(n) = &self.normal_maps {
            if n.len() != self.images.len() {
                return Err(TextureError::Manifest(
                    "normal map count differs from image count".into(),
                ));
            }
            sizes.extend(n.iter().map(|m| m.pixels.dimensions()));
        }
        if let Some(a) = &self.alpha_masks {
            if a.len() != self.images.len() {
                return Err(TextureError::Manifest(
                    "alpha mask count differs from image count".into(),
                ));
            }
            sizes.extend(a.iter().map(|m| m.dimensions()));
        }
        if sizes.iter().any(|&s| s != dims) {
            return Err(TextureError::MixedSizes(describe_sizes(&sizes)));
        }
        Ok(())
    }

    /// Loads a set from its JSON manifest; entry paths are relative to the manifest.
    pub fn load(manifest_path: &Path) -> Result<Self, TextureError> {
        let text = std::fs::read_to_string(manifest_path).map_err(|e| TextureError::io(manifest_path, e))?;
        let manifest: TextureSetManifest = serde_json::from_str(&text)
            .map_err(|e| TextureError::Manifest(format!("{}: {e}", manifest_path.display())))?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        manifest.resolve(base)
    }

    /// Writes the manifest plus one PNG per image, normal map and mask into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, TextureError> {
        std::fs::create_dir_all(dir).map_err(|e| TextureError::io(dir, e))?;
        let mut entries = Vec::new();
        for (k, img) in self.images.iter().enumerate() {
            let image = format!("{k:02}.png");
            img.save(&dir.join(&image))?;
            let normal = match &self.normal_maps {
                Some(maps) => {
                    let name = format!("{k:02}_normal.png");
                    maps[k].save(&dir.join(&name))?;
                    Some(name)
                }
                None => None,
            };
            let alpha = match &self.alpha_masks {
                Some(masks) => {
                    let name = format!("{k:02}_alpha.png");
                    let path = dir.join(&name);
                    masks[k].save(&path).map_err(|e| TextureError::io(&path, e))?;
                    Some(name)
                }
                None => None,
            };
            entries.push(ManifestEntry { image, normal, alpha });
        }
        let manifest = TextureSetManifest {
            name: self.name.clone(),
            physical_scale: self.images[0].physical_scale,
            entries,
        };
        let path = dir.join("set.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| TextureError::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
}

/// JSON manifest listing set entries in magnitude order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureSetManifest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical_scale: Option<f64>,
    pub entries: Vec<ManifestEntry>,
}

impl TextureSetManifest {
    pub fn resolve(&self, base: &Path) -> Result<TextureSet, TextureError> {
        if self.entries.is_empty() {
            return Err(TextureError::EmptySet);
        }
        let all_normals = self.entries.iter().all(|e| e.normal.is_some());
        let any_normals = self.entries.iter().any(|e| e.normal.is_some());
        let all_alpha = self.entries.iter().all(|e| e.alpha.is_some());
        let any_alpha = self.entries.iter().any(|e| e.alpha.is_some());
        if any_normals != all_normals || any_alpha != all_alpha {
            return Err(TextureError::Manifest(
                "normal and alpha paths must be given for every entry or none".into(),
            ));
        }
        let mut set = TextureSet {
            name: self.name.clone(),
            images: Vec::new(),
            normal_maps: all_normals.then(Vec::new),
            alpha_masks: all_alpha.then(Vec::new),
        };
        for e in &self.entries {
            let mut img = TextureImage::open(&base.join(&e.image))?;
            img.physical_scale = self.physical_scale;
            set.images.push(img);
            if let (Some(p), Some(maps)) = (&e.normal, set.normal_maps.as_mut()) {
                maps.push(NormalMap::open(&base.join(p))?);
            }
            if let (Some(p), Some(masks)) = (&e.alpha, set.alpha_masks.as_mut()) {
                let path = base.join(p);
                let m = image::open(&path).map_err(|err| TextureError::io(&path, err))?;
                masks.push(m.to_luma8());
            }
        }
        set.check()?;
        Ok(set)
    }
}

fn describe_sizes(sizes: &[(u32, u32)]) -> String {
    sizes
        .iter()
        .enumerate()
        .map(|(i, (w, h))| format!("#{i}={w}x{h}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds an ordered set, preserving input order as magnitude order.
pub fn build_texture_set(images: Vec<TextureImage>, options: &SetOptions) -> Result<TextureSet, TextureError> {
    if images.is_empty() {
        return Err(TextureError::EmptySet);
    }
    let sizes: Vec<(u32, u32)> = images.iter().map(|i| i.pixels.dimensions()).collect();
    let mixed = sizes.iter().any(|&s| s != sizes[0]);
    let images = if mixed {
        if !options.resample {
            return Err(TextureError::MixedSizes(describe_sizes(&sizes)));
        }
        // Largest by area; the first wins ties.
        let (tw, th) = sizes.iter().copied().fold((0, 0), |best, s| {
            if s.0 as u64 * s.1 as u64 > best.0 as u64 * best.1 as u64 {
                s
            } else {
                best
            }
        });
        images
            .into_iter()
            .map(|img| {
                if img.pixels.dimensions() == (tw, th) {
                    img
                } else {
                    TextureImage {
                        pixels: imageops::resize(&img.pixels, tw, th, FilterType::Triangle),
                        physical_scale: img.physical_scale,
                    }
                }
            })
            .collect()
    } else {
        images
    };
    let normal_maps = match options.normal_strength {
        Some(s) => Some(
            images
                .iter()
                .map(|img| make_normal_map(img, s))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let set = TextureSet {
        name: options.name.clone(),
        images,
        normal_maps,
        alpha_masks: None,
    };
    set.check()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgba, RgbaImage};

    fn solid(w: u32, h: u32, v: u8) -> TextureImage {
        TextureImage::new(RgbaImage::from_pixel(w, h, Rgba([v, v, v, 255]))).unwrap()
    }

    fn dots(density: u32) -> TextureImage {
        TextureImage::new(RgbaImage::from_fn(32, 32, |x, y| {
            if (x * 7 + y * 13) % 32 < density {
                Rgba([20, 20, 30, 255])
            } else {
                Rgba([240, 235, 220, 255])
            }
        }))
        .unwrap()
    }

    #[test]
    fn single_entry() {
        let set = build_texture_set(vec![solid(4, 4, 9)], &SetOptions::default()).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn preserves_order_and_adds_normals() {
        let input = vec![dots(2), dots(8), dots(20)];
        let opts = SetOptions {
            name: "ink".into(),
            normal_strength: Some(2.0),
            resample: false,
        };
        let set = build_texture_set(input.clone(), &opts).unwrap();
        assert_eq!(set.images, input);
        assert_eq!(set.normal_maps.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn mixed_sizes() {
        let err = build_texture_set(vec![solid(64, 64, 50), solid(32, 32, 50)], &SetOptions::default()).unwrap_err();
        assert!(err.to_string().contains("64x64") && err.to_string().contains("32x32"));
        let opts = SetOptions {
            resample: true,
            ..Default::default()
        };
        let set = build_texture_set(vec![solid(64, 64, 50), solid(32, 32, 50)], &opts).unwrap();
        for img in &set.images {
            assert_eq!(img.pixels.dimensions(), (64, 64));
            // A constant image resamples to itself.
            assert!(img.pixels.pixels().all(|p| p.0 == [50, 50, 50, 255]));
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SetOptions {
            name: "ink".into(),
            normal_strength: Some(1.5),
            resample: false,
        };
        let mut set = build_texture_set(vec![dots(3), dots(12)], &opts).unwrap();
        set.alpha_masks = Some(vec![GrayImage::from_pixel(32, 32, image::Luma([255])); 2]);
        let path = set.save(dir.path()).unwrap();
        let back = TextureSet::load(&path).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn manifest_rejects_partial_normals() {
        let m = TextureSetManifest {
            name: "x".into(),
            physical_scale: None,
            entries: vec![
                ManifestEntry {
                    image: "a.png".into(),
                    normal: Some("n.png".into()),
                    alpha: None,
                },
                ManifestEntry {
                    image: "b.png".into(),
                    normal: None,
                    alpha: None,
                },
            ],
        };
        assert!(matches!(m.resolve(Path::new(".")), Err(TextureError::Manifest(_))));
    }
}
