// Geohash cell decoding. Cells arrive as bucket keys from geohash_grid
// aggregations; the dashboard only ever needs their bounds, never encoding.

const BASE32 = "0123456789bcdefghjkmnpqrstuvwxyz";

export interface CellBounds {
  latLo: number;
  latHi: number;
  lngLo: number;
  lngHi: number;
}

export function decodeBounds(cell: string): CellBounds {
  if (!cell) {
    throw new Error("empty geohash");
  }
  let latLo = -90;
  let latHi = 90;
  let lngLo = -180;
  let lngHi = 180;
  let even = true;
  for (const c of cell) {
    const value = BASE32.indexOf(c);
    if (value < 0) {
      throw new Error(`invalid geohash character ${JSON.stringify(c)}`);
    }
    for (let shift = 4; shift >= 0; shift--) {
      const bit = (value >> shift) & 1;
      if (even) {
        const mid = (lngLo + lngHi) / 2;
        if (bit) {
          lngLo = mid;
        } else {
          lngHi = mid;
        }
      } else {
        const mid = (latLo + latHi) / 2;
        if (bit) {
          latLo = mid;
        } else {
          latHi = mid;
        }
      }
      even = !even;
    }
  }
  return { latLo, latHi, lngLo, lngHi };
}
