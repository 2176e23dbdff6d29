// Poll a job ticket until it reaches a terminal state.

import type { JobTicket } from './types.js';

export class JobFailedError extends Error {
  constructor(public ticket: JobTicket) {
    super(`job ${ticket.id} (${ticket.stage}) failed: ${ticket.error ?? 'unknown error'}`);
    this.name = 'JobFailedError';
  }
}

export async function pollJob(
  getJob: (id: string) => Promise<JobTicket>,
  jobId: string,
  opts: { intervalMs?: number; timeoutMs?: number; onProgress?: (t: JobTicket) => void } = {},
): Promise<JobTicket> {
  const interval = opts.intervalMs ?? 250;
  const deadline = Date.now() + (opts.timeoutMs ?? 120_000);
  for (;;) {
    const ticket = await getJob(jobId);
    opts.onProgress?.(ticket);
    if (ticket.status === 'succeeded') return ticket;
    if (ticket.status === 'failed') throw new JobFailedError(ticket);
    if (Date.now() > deadline) {
      throw new Error(`job ${jobId} timed out after ${opts.timeoutMs ?? 120_000}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, interval));
  }
}
