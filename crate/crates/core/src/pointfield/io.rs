//! Plain-text point files: two comment lines of provenance, a `x,y` header,
//! then one point per line in shortest round-trip decimal form.

use std::io::{BufRead, Write};

use super::{Box2, PointField, Topology};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scalar::Scalar;

const MAGIC: &str = "# annulus-perc point field v1";

impl<S: Scalar> PointField<S> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let bx = self.bx();
        writeln!(w, "{MAGIC}")?;
        let seed = self
            .seed()
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        let topology = match bx.topology {
            Topology::Hard => "hard",
            Topology::Torus => "torus",
        };
        writeln!(
            w,
            "# seed={seed},intensity={:?},origin_x={:?},origin_y={:?},width={:?},height={:?},topology={topology},cell_size={:?}",
            self.intensity(),
            bx.origin.x.as_f64(),
            bx.origin.y.as_f64(),
            bx.width.as_f64(),
            bx.height.as_f64(),
            self.cell_size().as_f64(),
        )?;
        writeln!(w, "x,y")?;
        for p in self.points() {
            writeln!(w, "{:?},{:?}", p.x.as_f64(), p.y.as_f64())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != MAGIC {
            return Err(Error::Parse("missing point-field header".into()));
        }
        let meta = next()?;
        let meta = meta
            .strip_prefix("# ")
            .ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let mut seed = None;
        let (mut intensity, mut ox, mut oy, mut w, mut h, mut cell) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let mut topology = Topology::Hard;
        for kv in meta.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry `{kv}`")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{k}: {e}")))
            };
            match k {
                "seed" if v == "none" => seed = None,
                "seed" => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|e| Error::Parse(format!("seed: {e}")))?,
                    )
                }
                "intensity" => intensity = num(v)?,
                "origin_x" => ox = num(v)?,
                "origin_y" => oy = num(v)?,
                "width" => w = num(v)?,
                "height" => h = num(v)?,
                "cell_size" => cell = num(v)?,
                "topology" => {
                    topology = match v {
                        "hard" => Topology::Hard,
                        "torus" => Topology::Torus,
                        _ => return Err(Error::Parse(format!("unknown topology `{v}`"))),
                    }
                }
                _ => return Err(Error::Parse(format!("unknown metadata key `{k}`"))),
            }
        }
        if next()?.trim() != "x,y" {
            return Err(Error::Parse("missing `x,y` column header".into()));
        }
        let mut points = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad point line `{line}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{line}`: {e}")))
            };
            points.push(Vec2::new(S::lit(parse(x)?), S::lit(parse(y)?)));
        }
        let bx = Box2::new(
            Vec2::new(S::lit(ox), S::lit(oy)),
            S::lit(w),
            S::lit(h),
            topology,
        )?;
        let mut field = PointField::from_points(bx, points, S::lit(cell))?;
        field.set_provenance(seed, intensity);
        Ok(field)
    }
}
