/**
 * Duplex transport to the engine plus a reconnecting client wrapper.
 *
 * The browser uses WebSocketTransport; tests use a TCP adapter with the
 * same interface. The console holds no control state of its own, so a
 * reconnect simply resumes the message flow.
 */

import { decodeInbound, encode, InboundMessage, OutboundMessage } from "./protocol";

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export type TransportFactory = () => Promise<Transport>;

export function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    let lineHandler: (line: string) => void = () => {};
    let closeHandler: () => void = () => {};
    ws.onopen = () =>
      resolve({
        send: (line) => ws.send(line),
        onLine: (h) => (lineHandler = h),
        onClose: (h) => (closeHandler = h),
        close: () => ws.close(),
      });
    ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    ws.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : "";
      lineHandler(text);
    };
    ws.onclose = () => closeHandler();
  });
}

export type ConnectionStatus = "connecting" | "connected" | "reconnecting";

/**
 * Engine client: maintains the connection (with automatic reconnect),
 * decodes inbound messages and fans them out to listeners.
 */
export class EngineClient {
  status: ConnectionStatus = "connecting";
  private transport: Transport | null = null;
  private listeners = new Set<(msg: InboundMessage) => void>();
  private statusListeners = new Set<(status: ConnectionStatus) => void>();
  private stopped = false;

  constructor(
    private readonly factory: TransportFactory,
    private readonly reconnectDelayMs = 500,
  ) {}

  async start(): Promise<void> {
    while (!this.stopped) {
      try {
        const transport = await this.factory();
        this.transport = transport;
        this.setStatus("connected");
        transport.onLine((line) => {
          const msg = decodeInbound(line);
          if (msg) this.listeners.forEach((fn) => fn(msg));
        });
        await new Promise<void>((resolve) => transport.onClose(resolve));
        this.transport = null;
      } catch {
        // fall through to retry
      }
      if (this.stopped) break;
      this.setStatus("reconnecting");
      await new Promise((r) => setTimeout(r, this.reconnectDelayMs));
    }
  }

  send(msg: OutboundMessage): boolean {
    if (!this.transport) return false;
    this.transport.send(encode(msg));
    return true;
  }

  onMessage(fn: (msg: InboundMessage) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  onStatus(fn: (status: ConnectionStatus) => void): void {
    this.statusListeners.add(fn);
  }

  stop(): void {
    this.stopped = true;
    this.transport?.close();
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.statusListeners.forEach((fn) => fn(status));
  }
}
