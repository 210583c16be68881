//! Shared point-set file format: a single header line
//! `# disperse-pointset v1 d=<d> n=<n> coord=<rational|decimal> space=<cube|torus>`
//! followed by n lines of d whitespace-separated coordinates.

use std::io::{BufRead, Write};

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Space};
use crate::scalar::{parse_rational, Coord, Rational};

const MAGIC: &str = "# disperse-pointset v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordFormat {
    Rational,
    Decimal,
}

pub fn read_pointset(r: impl BufRead) -> Result<PointSet<Rational>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty point-set file".into()))??;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Format(format!("bad header line {header:?}")))?;
    let mut d = None;
    let mut n = None;
    let mut space = None;
    let mut coord = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header field {field:?}")))?;
        match key {
            "d" => {
                d = Some(value.parse::<usize>().map_err(|_| {
                    Error::Format(format!("bad dimension {value:?} in header"))
                })?)
            }
            "n" => {
                n = Some(value.parse::<usize>().map_err(|_| {
                    Error::Format(format!("bad point count {value:?} in header"))
                })?)
            }
            "coord" => {
                coord = Some(match value {
                    "rational" => CoordFormat::Rational,
                    "decimal" => CoordFormat::Decimal,
                    _ => return Err(Error::Format(format!("bad coord mode {value:?}"))),
                })
            }
            "space" => {
                space = Some(match value {
                    "cube" => Space::Cube,
                    "torus" => Space::Torus,
                    _ => return Err(Error::Format(format!("bad space {value:?}"))),
                })
            }
            _ => return Err(Error::Format(format!("unknown header key {key:?}"))),
        }
    }
    let d = d.ok_or_else(|| Error::Format("header is missing d=".into()))?;
    let n = n.ok_or_else(|| Error::Format("header is missing n=".into()))?;
    let space = space.ok_or_else(|| Error::Format("header is missing space=".into()))?;
    let _ = coord.ok_or_else(|| Error::Format("header is missing coord=".into()))?;
    let mut points = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<Rational> = line
            .split_whitespace()
            .map(parse_rational)
            .collect::<Result<_>>()?;
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for c in &row {
            // Points live in [0,1]^d; the torus identifies 1 with 0 but the
            // representative must still be canonical.
            let ok = !c.is_negative()
                && match space {
                    Space::Cube => *c <= Rational::one(),
                    Space::Torus => *c < Rational::one(),
                };
            if !ok {
                return Err(Error::CoordinateOutOfRange(c.to_string()));
            }
        }
        points.push(row);
    }
    if points.len() != n {
        return Err(Error::Format(format!(
            "header promises {n} points but the file holds {}",
            points.len()
        )));
    }
    PointSet::new(d, points, space)
}

pub fn write_pointset(
    mut w: impl Write,
    p: &PointSet<Rational>,
    coord: CoordFormat,
) -> Result<()> {
    let space = match p.space() {
        Space::Cube => "cube",
        Space::Torus => "torus",
    };
    let mode = match coord {
        CoordFormat::Rational => "rational",
        CoordFormat::Decimal => "decimal",
    };
    writeln!(
        w,
        "{MAGIC} d={} n={} coord={mode} space={space}",
        p.dimension(),
        p.len()
    )?;
    for row in p.points() {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match coord {
                CoordFormat::Rational => {
                    if c.is_integer() {
                        c.to_integer().to_string()
                    } else {
                        format!("{}/{}", c.numer(), c.denom())
                    }
                }
                CoordFormat::Decimal => format!("{:.17}", Coord::to_f64(c)),
            })
            .collect();
        writeln!(w, "{}", cells.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radix::{stage1, ConstructionParams};
    use crate::scalar::Rational;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn round_trip(p: &PointSet<Rational>) -> PointSet<Rational> {
        let mut buf = Vec::new();
        write_pointset(&mut buf, p, CoordFormat::Rational).unwrap();
        read_pointset(&buf[..]).unwrap()
    }

    #[test]
    fn rational_round_trip_is_lossless() {
        let p = PointSet::new(
            2,
            vec![
                vec![rat(5, 8), rat(0, 1)],
                vec![rat(1, 1), rat(1, 3)],
                vec![rat(999999, 1000000), rat(1, 7)],
            ],
            Space::Cube,
        )
        .unwrap();
        let q = round_trip(&p);
        assert_eq!(p.points(), q.points());
        assert_eq!(q.space(), Space::Cube);
    }

    #[test]
    fn stage1_output_round_trips() {
        let params = ConstructionParams::desk(2).unwrap();
        let out = stage1(432, &params, 3, true).unwrap();
        let q = round_trip(&out.points);
        assert_eq!(out.points.points(), q.points());
    }

    #[test]
    fn decimal_coordinates_parse_exactly() {
        let text = "# disperse-pointset v1 d=2 n=1 coord=decimal space=cube\n0.625 0.5\n";
        let p = read_pointset(text.as_bytes()).unwrap();
        assert_eq!(p.points()[0], vec![rat(5, 8), rat(1, 2)]);
    }

    #[test]
    fn distinct_diagnostics() {
        let bad_header = "# disperse-points v1 d=2 n=0 coord=rational space=cube\n";
        assert!(matches!(
            read_pointset(bad_header.as_bytes()),
            Err(Error::Format(_))
        ));
        let out_of_range = "# disperse-pointset v1 d=1 n=1 coord=rational space=cube\n9/8\n";
        assert!(matches!(
            read_pointset(out_of_range.as_bytes()),
            Err(Error::CoordinateOutOfRange(_))
        ));
        let wrong_dim = "# disperse-pointset v1 d=2 n=1 coord=rational space=cube\n1/2\n";
        assert!(matches!(
            read_pointset(wrong_dim.as_bytes()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let wrong_count = "# disperse-pointset v1 d=1 n=2 coord=rational space=cube\n1/2\n";
        assert!(matches!(
            read_pointset(wrong_count.as_bytes()),
            Err(Error::Format(_))
        ));
        // 1 is canonical in the cube but not on the torus.
        let torus_one = "# disperse-pointset v1 d=1 n=1 coord=rational space=torus\n1\n";
        assert!(matches!(
            read_pointset(torus_one.as_bytes()),
            Err(Error::CoordinateOutOfRange(_))
        ));
    }
}
