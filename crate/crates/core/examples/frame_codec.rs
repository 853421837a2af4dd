// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Encode frames, corrupt one on the wire and watch the decoder resync.

use awgsim::protocol::{serialize_frame, Decoded, Decoder, Frame, Opcode};

fn main() {
    let a = serialize_frame(&Frame::new(Opcode::Arm, 1, vec![]));
    let mut b = serialize_frame(&Frame::new(
        Opcode::RegRead,
        0,
        vec![0, 0, 0, 0, 1, 0, 0, 0],
    ));
    let c = serialize_frame(&Frame::new(Opcode::StatusQuery, 0, vec![]));
    b[12] ^= 0x40;

    let mut stream = b"noise".to_vec();
    for f in [&a, &b, &c] {
        stream.extend_from_slice(f);
    }
    let mut dec = Decoder::new();
    // feed in small pieces, the way a socket would deliver them
    for chunk in stream.chunks(5) {
        dec.push(chunk);
        while let Some(item) = dec.next_item() {
            match item {
                Decoded::Frame(f) => println!(
                    "frame opcode 0x{:02X} channel {} payload {} B",
                    f.opcode,
                    f.channel,
                    f.payload.len()
                ),
                Decoded::Corrupt { frame_len } => {
                    println!("corrupt frame of {frame_len} B dropped")
                }
            }
        }
    }
    println!("bytes skipped while resyncing: {}", dec.skipped_bytes());
}
