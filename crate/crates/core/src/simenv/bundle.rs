//! Map bundle on disk: `world.pgm` (0 = wall, 255 = free; anything >= 128 is
//! free on read) plus `world.json` with cell size, labels and episodes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeSpec, Region, SceneObject, SimWorld, DEFAULT_AGENT_RADIUS, DEFAULT_WALL_HEIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MapBundle {
    pub world: SimWorld,
    pub episodes: Vec<EpisodeSpec>,
}

fn default_wall_height() -> f64 {
    DEFAULT_WALL_HEIGHT
}

fn default_agent_radius() -> f64 {
    DEFAULT_AGENT_RADIUS
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    cell_size: f64,
    #[serde(default = "default_wall_height")]
    wall_height: f64,
    #[serde(default = "default_agent_radius")]
    agent_radius: f64,
    #[serde(default)]
    regions: Vec<Region>,
    #[serde(default)]
    objects: Vec<SceneObject>,
    #[serde(default)]
    episodes: Vec<EpisodeSpec>,
}

impl MapBundle {
    pub fn new(world: SimWorld, episodes: Vec<EpisodeSpec>) -> Self {
        Self { world, episodes }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let pgm = fs::read(dir.join("world.pgm"))
            .map_err(|e| Error::input(format!("{}: {e}", dir.join("world.pgm").display())))?;
        let (width, height, pixels) = read_pgm(&pgm)?;
        let json = fs::read_to_string(dir.join("world.json"))
            .map_err(|e| Error::input(format!("{}: {e}", dir.join("world.json").display())))?;
        let side: Sidecar = serde_json::from_str(&json)
            .map_err(|e| Error::input(format!("world.json: {e}")))?;
        let mut world = SimWorld::new(
            width,
            height,
            side.cell_size,
            pixels.iter().map(|&v| v < 128).collect(),
        )?;
        world.wall_height = side.wall_height;
        world.agent_radius = side.agent_radius;
        world.regions = side.regions;
        world.objects = side.objects;
        for ep in &side.episodes {
            ep.validate(&world)?;
        }
        Ok(Self {
            world,
            episodes: side.episodes,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let pixels: Vec<u8> = self
            .world
            .occupancy()
            .iter()
            .map(|&o| if o { 0 } else { 255 })
            .collect();
        let mut pgm = Vec::new();
        write_pgm(&mut pgm, self.world.width(), self.world.height(), &pixels)?;
        fs::write(dir.join("world.pgm"), pgm)?;
        let side = Sidecar {
            cell_size: self.world.cell_size(),
            wall_height: self.world.wall_height,
            agent_radius: self.world.agent_radius,
            regions: self.world.regions.clone(),
            objects: self.world.objects.clone(),
            episodes: self.episodes.clone(),
        };
        fs::write(dir.join("world.json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    pub fn episode(&self, id: &str) -> Option<&EpisodeSpec> {
        self.episodes.iter().find(|e| e.id == id)
    }
}

pub fn write_pgm<W: Write>(mut w: W, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(pixels)?;
    Ok(())
}

/// Reads binary (P5) or plain (P2) 8-bit greymaps; returns (width, height, pixels).
pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::input("pgm: unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = next_token(bytes)?;
    let num = |s: String| {
        s.parse::<usize>()
            .map_err(|_| Error::input(format!("pgm: bad header number {s:?}")))
    };
    let width = num(next_token(bytes)?)?;
    let height = num(next_token(bytes)?)?;
    let maxval = num(next_token(bytes)?)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::input("pgm: only 8-bit maps are supported"));
    }
    let scale = |v: usize| ((v * 255) / maxval) as u8;
    let n = width * height;
    match magic.as_str() {
        "P5" => {
            // Exactly one whitespace byte separates the header from the raster.
            let body = bytes.get(pos + 1..pos + 1 + n).ok_or_else(|| Error::input("pgm: truncated raster"))?;
            Ok((width, height, body.iter().map(|&v| scale(v as usize)).collect()))
        }
        "P2" => {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(scale(num(next_token(bytes)?)?));
            }
            Ok((width, height, out))
        }
        other => Err(Error::input(format!("pgm: unsupported magic {other:?}"))),
    }
}
