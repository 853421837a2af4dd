// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Serve a board over TCP, load a full waveform image, read it back, run a
//! program and receive status packets over UDP.

use std::net::UdpSocket;
use std::time::Duration;

use awgsim::protocol::{registers, shared, Board, Client, StatusPacket, Tcp, TcpServer};
use awgsim::SequenceEntry;

fn main() {
    let udp = UdpSocket::bind("127.0.0.1:0").unwrap();
    udp.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
    let server = TcpServer::spawn(
        shared(Board::new(7)),
        "127.0.0.1:0",
        Some(udp.local_addr().unwrap()),
    )
    .unwrap();
    println!("board listening on {}", server.local_addr());

    let mut client = Client::new(Tcp::connect(server.local_addr()).unwrap());
    let image: Vec<i16> = (0..1 << 18)
        .map(|k: i32| (k.wrapping_mul(2654435761u32 as i32) >> 16) as i16)
        .collect();
    client.write_wdm(0, 0, &image).unwrap();
    let back = client.read_wdm(0, 0, (image.len() / 8) as u32).unwrap();
    println!("2^18-sample image read back bit-exact: {}", back == image);

    client
        .write_sdm(0, 0, &[SequenceEntry::segment(0, 64).with_counter(4).end()])
        .unwrap();
    client.reg_write(registers::STATUS_PERIOD, 100).unwrap();
    let armed = client.arm(0).unwrap();
    client.advance(300).unwrap();
    let st = client.status().unwrap();
    println!(
        "armed at cycle {armed}; now {} cycles, channel 0 {:?} after {} words",
        st.uptime_cycles, st.channels[0].status, st.channels[0].executed_words
    );

    let mut buf = [0u8; 128];
    if let Ok(n) = udp.recv(&mut buf) {
        let p = StatusPacket::from_bytes(&buf[..n]).unwrap();
        println!(
            "UDP status: board {} at cycle {}",
            p.board_id, p.uptime_cycles
        );
    }
    drop(client);
    server.shutdown();
}
